//! Polynomial roots from the eigenvalues of a balanced companion matrix,
//! refined by a few guarded Newton steps and merged into clusters.

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use super::poly::Polynomial;
use crate::error::{Error, Result};

/// Roots closer than this (relative to `max(1, |z|)`) are merged.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Largest accepted backward residual `|q(z)| / Σ|q_i||z|^i`.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;

const NEWTON_STEPS: usize = 6;

/// A root together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl Root {
    pub fn simple(value: Complex64) -> Self {
        Self {
            value,
            multiplicity: 1,
        }
    }

    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }
}

/// Serialized as `[re, im]`.
pub(crate) fn serialize_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// All roots of `q`, merged by multiplicity. Complex roots come in exact
/// conjugate pairs; every root passes the backward residual test.
pub fn poly_roots(q: &Polynomial) -> Result<Vec<Root>> {
    let roots = roots_unchecked(q)?;
    for r in &roots {
        let z = r.value;
        let scale = q.eval_abs(z.norm());
        let residual = if scale > 0.0 {
            q.eval_complex(z).norm() / scale
        } else {
            0.0
        };
        if residual > ROOT_RESIDUAL_TOL {
            return Err(Error::RootResidual {
                root: format!("{z}"),
                residual,
                tolerance: ROOT_RESIDUAL_TOL,
            });
        }
    }
    Ok(roots)
}

/// Roots without the residual test; used where a poor root only costs a
/// missed cancellation.
pub(crate) fn roots_unchecked(q: &Polynomial) -> Result<Vec<Root>> {
    let degree = q.degree().ok_or(Error::ZeroPolynomial)?;
    let zeros_at_origin = q.coeffs().iter().take_while(|c| **c == 0.0).count();
    let reduced = Polynomial::new(q.coeffs()[zeros_at_origin..].to_vec());
    let mut simple = companion_roots(&reduced)?;
    polish(&reduced, &mut simple);
    let mut roots = cluster(&simple);
    if zeros_at_origin > 0 {
        roots.push(Root {
            value: Complex64::new(0.0, 0.0),
            multiplicity: zeros_at_origin,
        });
    }
    debug_assert_eq!(roots.iter().map(|r| r.multiplicity).sum::<usize>(), degree);
    sort_roots(&mut roots);
    Ok(roots)
}

fn companion_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    let Some(m) = p.degree() else {
        return Err(Error::ZeroPolynomial);
    };
    match m {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Complex64::new(-p.coeff(0) / p.coeff(1), 0.0)]),
        _ => {}
    }
    let lead = p.coeff(m);
    let mut c = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        c[(i, i - 1)] = 1.0;
    }
    for i in 0..m {
        c[(i, m - 1)] = -p.coeff(i) / lead;
    }
    balance_parlett_reinsch(&mut c);
    let eig: Vec<Complex64> = match Schur::try_new(c, f64::EPSILON, 1000 * m) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        // unshifted QR can stall on structured companions (e.g. even polynomials)
        None => aberth(p)?,
    };
    // Keep reals and upper-half roots; lower-half partners are rebuilt as
    // exact conjugates after polishing.
    let mut out: Vec<Complex64> = eig.iter().filter(|z| z.im >= 0.0).copied().collect();
    let lower = eig.iter().filter(|z| z.im < 0.0).count();
    let upper = out.iter().filter(|z| z.im > 0.0).count();
    if upper != lower {
        return Ok(eig.iter().copied().collect());
    }
    let mirrored: Vec<Complex64> = out.iter().filter(|z| z.im > 0.0).map(|z| z.conj()).collect();
    out.extend(mirrored);
    Ok(out)
}

/// Aberth-Ehrlich simultaneous iteration, started on a circle whose radius
/// is the geometric mean of the root moduli.
fn aberth(p: &Polynomial) -> Result<Vec<Complex64>> {
    let m = p.degree().ok_or(Error::ZeroPolynomial)?;
    let dp = p.derivative();
    let radius = (p.coeff(0) / p.coeff(m)).abs().powf(1.0 / m as f64).max(f64::MIN_POSITIVE);
    let mut z: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / m as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for i in 0..m {
            let val = p.eval_complex(z[i]);
            if val.norm() == 0.0 {
                continue;
            }
            let ratio = val / dp.eval_complex(z[i]);
            let repulsion: Complex64 = (0..m).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if moved <= 4.0 * f64::EPSILON {
            break;
        }
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("root iteration did not converge".into()));
    }
    // real roots come back with rounding-level imaginary parts of either sign
    for v in z.iter_mut() {
        if v.im.abs() <= 1e-10 * v.norm().max(1.0) {
            v.im = 0.0;
        }
    }
    // the residual test in poly_roots decides whether these are usable
    Ok(z)
}

/// Newton refinement that only accepts small steps which reduce `|p|`.
fn polish(p: &Polynomial, roots: &mut [Complex64]) {
    let dp = p.derivative();
    for z in roots.iter_mut() {
        let is_real = z.im == 0.0;
        for _ in 0..NEWTON_STEPS {
            let val = p.eval_complex(*z);
            let der = dp.eval_complex(*z);
            if val.norm() == 0.0 || der.norm() == 0.0 {
                break;
            }
            let mut step = val / der;
            if is_real {
                step.im = 0.0;
            }
            if step.norm() > 1e-3 * z.norm().max(1.0) {
                break;
            }
            let next = *z - step;
            if p.eval_complex(next).norm() >= val.norm() {
                break;
            }
            *z = next;
        }
    }
    // restore exact conjugate symmetry
    let n = roots.len();
    for i in 0..n {
        if roots[i].im > 0.0 {
            if let Some(j) = (0..n)
                .filter(|&j| roots[j].im < 0.0)
                .min_by(|&a, &b| (roots[a] - roots[i].conj()).norm().total_cmp(&(roots[b] - roots[i].conj()).norm()))
            {
                roots[j] = roots[i].conj();
            }
        }
    }
}

fn cluster(values: &[Complex64]) -> Vec<Root> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let tol = CLUSTER_TOL * values[i].norm().max(values[j].norm()).max(1.0);
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += values[i];
                g.2 += 1;
            }
            None => groups.push((r, values[i], 1)),
        }
    }
    groups
        .into_iter()
        .map(|(_, sum, count)| {
            let mut value = sum / count as f64;
            if count > 1 && value.im.abs() <= CLUSTER_TOL * value.norm().max(1.0) {
                value.im = 0.0;
            }
            Root {
                value,
                multiplicity: count,
            }
        })
        .collect()
}

/// Deterministic order: by modulus, then real part, then imaginary part.
pub(crate) fn sort_roots(roots: &mut [Root]) {
    roots.sort_by(|a, b| {
        a.modulus()
            .total_cmp(&b.modulus())
            .then(a.value.re.total_cmp(&b.value.re))
            .then(a.value.im.total_cmp(&b.value.im))
    });
}
