//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes the sequence as a JSON array and returns JSON, so the
//! page needs no generated bindings beyond strings and numbers.

use aakwfa::aak::aak_approximate;
use aakwfa::bounds::{ErrorReport, ReportOptions};
use aakwfa::hankel::{build_truncation, sample_noise};
use aakwfa::wfa::{recover_window, spectral_extract};
use aakwfa::{BeyondTable, Error, NoiseSpec, TableOracle};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn parse_table(values: &str) -> Result<TableOracle, Error> {
    let values: Vec<f64> =
        serde_json::from_str(values).map_err(|e| Error::InvalidArgument(format!("values must be a JSON array: {e}")))?;
    // the page shows finite prefixes; treat everything past them as zero
    TableOracle::new(values, BeyondTable::Zero)
}

fn noise(p: f64, seed: u64) -> NoiseSpec {
    if p > 0.0 {
        NoiseSpec::new(p, seed)
    } else {
        NoiseSpec::disabled()
    }
}

#[derive(Serialize)]
struct Pole {
    re: f64,
    im: f64,
    multiplicity: usize,
}

/// Singular values of the (optionally perturbed) `n × n` Hankel block.
pub fn spectrum_json(values: &str, n: usize, noise_p: f64, seed: u64) -> Result<String, Error> {
    let oracle = parse_table(values)?;
    let spec = noise(noise_p, seed);
    let block = build_truncation(&oracle, n)?.add(&sample_noise(n, &spec)?)?;
    Ok(json!({ "singular_values": block.singular_values()? }).to_string())
}

/// Rank-`k` approximation: poles, extracted automaton, fitted series and
/// error report.
pub fn approximate_json(values: &str, k: usize, n: usize, noise_p: f64, seed: u64) -> Result<String, Error> {
    let oracle = parse_table(values)?;
    let result = aak_approximate(&oracle, k, n, &noise(noise_p, seed))?;
    let wfa = spectral_extract(&recover_window(&result.symbol, k)?)?;
    let report = ErrorReport::for_run(&oracle, &result, &wfa, &ReportOptions::default())?;
    let poles: Vec<Pole> = result
        .symbol
        .poles()
        .iter()
        .map(|r| Pole {
            re: r.value.re,
            im: r.value.im,
            multiplicity: r.multiplicity,
        })
        .collect();
    let len = oracle.values().len().max(2 * n);
    let fitted: Vec<f64> = wfa.stream().take(len).collect();
    let warnings: Vec<String> = result.warnings().iter().map(|w| format!("{w:?}")).collect();
    Ok(json!({
        "sigma_k_n": result.sigma_k_n,
        "singular_values": result.singular_values,
        "poles": poles,
        "wfa": wfa,
        "fitted": fitted,
        "report": report,
        "warnings": warnings,
    })
    .to_string())
}

fn to_js(r: Result<String, Error>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn spectrum(values: &str, n: usize, noise_p: f64, seed: u32) -> Result<String, JsError> {
    to_js(spectrum_json(values, n, noise_p, seed.into()))
}

#[wasm_bindgen]
pub fn approximate(values: &str, k: usize, n: usize, noise_p: f64, seed: u32) -> Result<String, JsError> {
    to_js(approximate_json(values, k, n, noise_p, seed.into()))
}
