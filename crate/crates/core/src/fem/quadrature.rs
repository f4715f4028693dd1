//! Gauss-Legendre rules on the reference cell `[0,1]²` and the bilinear
//! shape functions.

/// Values and reference gradients of the four bilinear shape functions.
/// Vertex order: (0,0), (1,0), (1,1), (0,1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeEval {
    pub values: [f64; 4],
    pub grads: [[f64; 2]; 4],
}

/// Bilinear shape functions at the reference point `(s, t)`.
pub fn shape_eval(s: f64, t: f64) -> ShapeEval {
    ShapeEval {
        values: [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t],
        grads: [
            [-(1.0 - t), -(1.0 - s)],
            [1.0 - t, -s],
            [t, s],
            [-t, 1.0 - s],
        ],
    }
}

/// One-dimensional Gauss-Legendre points and weights on `[0, 1]`.
pub fn gauss_1d(n: usize) -> Vec<(f64, f64)> {
    let (pts, wts): (&[f64], &[f64]) = match n {
        1 => (&[0.0], &[2.0]),
        2 => {
            const A: f64 = 0.577_350_269_189_625_8;
            (&[-A, A], &[1.0, 1.0])
        }
        3 => {
            const A: f64 = 0.774_596_669_241_483_4;
            (&[-A, 0.0, A], &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            const A: f64 = 0.339_981_043_584_856_3;
            const B: f64 = 0.861_136_311_594_052_6;
            const WA: f64 = 0.652_145_154_862_546_1;
            const WB: f64 = 0.347_854_845_137_453_9;
            (&[-B, -A, A, B], &[WB, WA, WA, WB])
        }
        _ => panic!("Gauss rule with {n} points is not tabulated"),
    };
    pts.iter()
        .zip(wts)
        .map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Tensor-product rule on the reference cell with shape data cached per point.
#[derive(Debug, Clone)]
pub struct QuadratureTable {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub shapes: Vec<ShapeEval>,
}

impl QuadratureTable {
    pub fn gauss(n: usize) -> Self {
        let line = gauss_1d(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for &(t, wt) in &line {
            for &(s, ws) in &line {
                points.push([s, t]);
                weights.push(ws * wt);
            }
        }
        let shapes = points.iter().map(|p| shape_eval(p[0], p[1])).collect();
        QuadratureTable {
            points,
            weights,
            shapes,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nodal_values() {
        assert_eq!(shape_eval(0.0, 0.0).values, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(shape_eval(1.0, 1.0).values, [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(shape_eval(0.5, 0.5).values, [0.25; 4]);
    }

    proptest! {
        #[test]
        fn partition_of_unity(s in 0.0..=1.0f64, t in 0.0..=1.0f64) {
            let e = shape_eval(s, t);
            prop_assert!((e.values.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let gx: f64 = e.grads.iter().map(|g| g[0]).sum();
            let gy: f64 = e.grads.iter().map(|g| g[1]).sum();
            prop_assert!(gx.abs() < 1e-15 && gy.abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        for n in 1..=4 {
            let rule = gauss_1d(n);
            for p in 0..2 * n {
                let q: f64 = rule.iter().map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn two_point_rule_integrates_q1_gradient_products() {
        // ∫ ∂N_a/∂s ∂N_b/∂s over the cell, compared with 4x4 Gauss
        let lo = QuadratureTable::gauss(2);
        let hi = QuadratureTable::gauss(4);
        for a in 0..4 {
            for b in 0..4 {
                for (da, db) in [(0, 0), (0, 1), (1, 1)] {
                    let f = |t: &QuadratureTable| -> f64 {
                        (0..t.len())
                            .map(|q| t.weights[q] * t.shapes[q].grads[a][da] * t.shapes[q].grads[b][db])
                            .sum()
                    };
                    assert!((f(&lo) - f(&hi)).abs() < 1e-15);
                }
            }
        }
    }
}
