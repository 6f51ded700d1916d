//! Independent curvature computation from the full 4-metric.
//!
//! The frame is `E0 = d/dxi` together with a Milnor frame on the fiber,
//! `[E2,E3] = 2E1`, `[E3,E1] = 2E2`, `[E1,E2] = 2E3`, in which the metric is
//! `diag(rho^2, f^2, g^2, h^2)`. Christoffel symbols come from the Koszul
//! formula with structure constants, the curvature tensor is contracted
//! generically, and the only derivatives are first `xi`-derivatives, applied
//! once to the metric and once to the connection.

use crate::curvature::CurvatureField;
use crate::grid;
use crate::profile::Profile;

const DIM: usize = 4;

/// Structure constants `c[a][b][d]` with `[E_a, E_b] = c_ab^d E_d`.
fn structure_constants() -> [[[f64; DIM]; DIM]; DIM] {
    let mut c = [[[0.0; DIM]; DIM]; DIM];
    for (a, b, d) in [(2, 3, 1), (3, 1, 2), (1, 2, 3)] {
        c[a][b][d] = 2.0;
        c[b][a][d] = -2.0;
    }
    c
}

type Gamma = [[[f64; DIM]; DIM]; DIM];

/// `Gamma[a][b][e]` with `nabla_{E_a} E_b = Gamma_ab^e E_e`, at one point.
fn christoffel(metric: &[f64; DIM], metric_xi: &[f64; DIM], c: &Gamma) -> Gamma {
    // E_a applied to a diagonal metric component: only E0 differentiates.
    let deriv = |a: usize, p: usize, q: usize| -> f64 {
        if a == 0 && p == q {
            metric_xi[p]
        } else {
            0.0
        }
    };
    let gm = |p: usize, q: usize| if p == q { metric[p] } else { 0.0 };
    let mut out = [[[0.0; DIM]; DIM]; DIM];
    for a in 0..DIM {
        for b in 0..DIM {
            for e in 0..DIM {
                let mut lower = deriv(a, b, e) + deriv(b, e, a) - deriv(e, a, b);
                for d in 0..DIM {
                    lower += c[a][b][d] * gm(d, e) - c[b][e][d] * gm(d, a) + c[e][a][d] * gm(d, b);
                }
                out[a][b][e] = 0.5 * lower / metric[e];
            }
        }
    }
    out
}

pub fn riemann_oracle(profile: &Profile) -> CurvatureField {
    let n = profile.n_points();
    let h = profile.grid().delta_xi();
    let c = structure_constants();

    let components: [Vec<f64>; DIM] = [
        profile.rho.iter().map(|r| r * r).collect(),
        profile.f.iter().map(|v| v * v).collect(),
        profile.g.iter().map(|v| v * v).collect(),
        profile.h.iter().map(|v| v * v).collect(),
    ];
    let components_xi: Vec<Vec<f64>> = components.iter().map(|v| grid::d1_vec(v, h)).collect();

    let gammas: Vec<Gamma> = (0..n)
        .map(|i| {
            let m = [components[0][i], components[1][i], components[2][i], components[3][i]];
            let mx = [
                components_xi[0][i],
                components_xi[1][i],
                components_xi[2][i],
                components_xi[3][i],
            ];
            christoffel(&m, &mx, &c)
        })
        .collect();

    // xi-derivative of every connection coefficient
    let mut gamma_xi: Vec<Gamma> = vec![[[[0.0; DIM]; DIM]; DIM]; n];
    let mut series = vec![0.0; n];
    let mut deriv = vec![0.0; n];
    for a in 0..DIM {
        for b in 0..DIM {
            for e in 0..DIM {
                for (s, g) in series.iter_mut().zip(&gammas) {
                    *s = g[a][b][e];
                }
                grid::d1(&series, h, &mut deriv);
                for (gx, d) in gamma_xi.iter_mut().zip(&deriv) {
                    gx[a][b][e] = *d;
                }
            }
        }
    }

    let planes = [(1, 2), (2, 3), (3, 1), (0, 1), (0, 2), (0, 3)];
    let mut out: [Vec<f64>; 6] = Default::default();
    for v in out.iter_mut() {
        *v = vec![0.0; n];
    }
    for i in 0..n {
        let gm = &gammas[i];
        let gx = &gamma_xi[i];
        for (slot, &(a, b)) in planes.iter().enumerate() {
            // R(E_a, E_b) E_b, component along E_a
            let (cc, e) = (b, a);
            let mut r = 0.0;
            if a == 0 {
                r += gx[b][cc][e];
            }
            if b == 0 {
                r -= gx[a][cc][e];
            }
            for d in 0..DIM {
                r += gm[b][cc][d] * gm[a][d][e] - gm[a][cc][d] * gm[b][d][e]
                    - c[a][b][d] * gm[d][cc][e];
            }
            let metric_bb = components[b][i];
            out[slot][i] = r / metric_bb;
        }
    }

    let [kappa12, kappa23, kappa31, kappa01, kappa02, kappa03] = out;
    let mut hat12 = vec![0.0; n];
    let mut hat23 = vec![0.0; n];
    let mut hat31 = vec![0.0; n];
    // intrinsic fiber curvatures from the same contraction with the E0 terms removed
    for i in 0..n {
        let m = [1.0, components[1][i], components[2][i], components[3][i]];
        let gm = christoffel(&m, &[0.0; DIM], &c);
        for (slot, (a, b)) in [(1, 2), (2, 3), (3, 1)].into_iter().enumerate() {
            let mut r = 0.0;
            for d in 1..DIM {
                r += gm[b][b][d] * gm[a][d][a] - gm[a][b][d] * gm[b][d][a] - c[a][b][d] * gm[d][b][a];
            }
            let v = r / m[b];
            match slot {
                0 => hat12[i] = v,
                1 => hat23[i] = v,
                _ => hat31[i] = v,
            }
        }
    }
    let scalar_r = (0..n)
        .map(|i| kappa01[i] + kappa02[i] + kappa03[i] + kappa12[i] + kappa23[i] + kappa31[i])
        .collect();
    CurvatureField {
        kappa12,
        kappa23,
        kappa31,
        kappa01,
        kappa02,
        kappa03,
        hat12,
        hat23,
        hat31,
        scalar_r,
    }
}
