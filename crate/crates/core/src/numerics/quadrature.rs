use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    /// Composite rule over `[a, b]` whose panels shrink geometrically towards
    /// both endpoints (ratio `1/2`, `levels` panels per side).
    ///
    /// Suited to integrands with kinks or integrable power singularities at
    /// the endpoints.
    pub fn graded(&self, a: f64, b: f64, levels: usize) -> Vec<(f64, f64)> {
        let mut breaks = Vec::with_capacity(2 * levels + 3);
        let len = b - a;
        breaks.push(a);
        for i in (1..=levels).rev() {
            breaks.push(a + 0.5 * len * 0.5f64.powi(i as i32));
        }
        breaks.push(a + 0.5 * len);
        for i in 1..=levels {
            breaks.push(b - 0.5 * len * 0.5f64.powi(i as i32));
        }
        breaks.push(b);
        let mut out = Vec::with_capacity((breaks.len() - 1) * self.len());
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                out.extend(self.mapped(w[0], w[1]));
            }
        }
        out
    }

    /// Composite rule with `panels` equal panels.
    pub fn uniform(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|i| {
                let lo = a + h * i as f64;
                self.mapped(lo, lo + h).collect::<Vec<_>>()
            })
            .collect()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
