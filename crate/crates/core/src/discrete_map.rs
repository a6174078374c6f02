//! Maps from a periodic source grid into a target chart.
//!
//! Values are stored once per node of the fundamental domain. Reads past the
//! seam go through [`MapSpace::value`], which applies the target deck action
//! prescribed by the field's [`TwistData`].

use crate::error::{Error, Result};
use crate::models::{DeckElement, SourceSurface, TargetManifold};
use crate::rng::SplitMix64;
use crate::tensor::{compensated_sum, Matrix, Tensor3, TangentMap, Vector};

/// Uniform grid over the source fundamental domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub n: [usize; 2],
    pub periods: [f64; 2],
}

impl GridSpec {
    pub const MIN_NODES: usize = 8;

    pub fn new(n_s: usize, n_theta: usize, periods: [f64; 2]) -> Result<Self> {
        for (name, n) in [("n_s", n_s), ("n_theta", n_theta)] {
            if n < Self::MIN_NODES {
                return Err(Error::config(name, format!("must be >= {}, got {n}", Self::MIN_NODES)));
            }
        }
        if !periods.iter().all(|p| p.is_finite() && *p > 0.0) {
            return Err(Error::config("periods", format!("must be positive, got {periods:?}")));
        }
        Ok(Self {
            n: [n_s, n_theta],
            periods,
        })
    }

    pub fn spacing(&self) -> [f64; 2] {
        [
            self.periods[0] / self.n[0] as f64,
            self.periods[1] / self.n[1] as f64,
        ]
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n[1] + j
    }

    pub fn node(&self, k: usize) -> (usize, usize) {
        (k / self.n[1], k % self.n[1])
    }

    pub fn coord(&self, i: usize, j: usize) -> Vector<2> {
        let d = self.spacing();
        Vector::<2>::new(i as f64 * d[0], j as f64 * d[1])
    }

    pub fn cell_area(&self) -> f64 {
        let d = self.spacing();
        d[0] * d[1]
    }

    /// Wrap an index pair, returning the stored node and the number of
    /// periods crossed along each axis.
    pub fn wrap(&self, i: isize, j: isize) -> ((usize, usize), [i64; 2]) {
        let (n0, n1) = (self.n[0] as isize, self.n[1] as isize);
        (
            (i.rem_euclid(n0) as usize, j.rem_euclid(n1) as usize),
            [i.div_euclid(n0) as i64, j.div_euclid(n1) as i64],
        )
    }
}

/// Finite-difference order used for derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StencilOrder {
    #[default]
    Second,
    Fourth,
}

/// Deck element applied when a read crosses the seam along each source axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TwistData {
    pub along_s: DeckElement,
    pub along_theta: DeckElement,
}

impl TwistData {
    pub const TRIVIAL: TwistData = TwistData {
        along_s: [0, 0],
        along_theta: [0, 0],
    };

    /// Deck element for a read that crossed `wraps` periods.
    pub fn deck_for(&self, wraps: [i64; 2]) -> DeckElement {
        [
            wraps[0] * self.along_s[0] + wraps[1] * self.along_theta[0],
            wraps[0] * self.along_s[1] + wraps[1] * self.along_theta[1],
        ]
    }

    /// Powers must be zero on generators the target does not have.
    pub fn validate(&self, deck_rank: usize) -> Result<()> {
        for g in [self.along_s, self.along_theta] {
            if g[deck_rank.min(2)..].iter().any(|&x| x != 0) {
                return Err(Error::config(
                    "twist",
                    format!("{g:?} uses deck generators beyond the target's rank {deck_rank}"),
                ));
            }
        }
        Ok(())
    }
}

/// Node values of a map into an `N`-dimensional target chart.
#[derive(Clone, Debug, PartialEq)]
pub struct MapField<const N: usize> {
    pub grid: GridSpec,
    pub twist: TwistData,
    pub values: Vec<Vector<N>>,
}

impl<const N: usize> MapField<N> {
    pub fn get(&self, i: usize, j: usize) -> Vector<N> {
        self.values[self.grid.index(i, j)]
    }
}

/// Target tangent vectors along a map, one per node.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationField<const N: usize> {
    pub grid: GridSpec,
    pub values: Vec<Vector<N>>,
}

impl<const N: usize> VariationField<N> {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Vector::<N>::zeros(); grid.len()],
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Random trigonometric polynomial `σ ↦ ℝᴺ`, periodic on the fundamental
/// domain, with modes `|k₁|, |k₂| ≤ max_mode` and coefficients decaying like
/// `1/(1 + |k|²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothNoise<const N: usize> {
    periods: [f64; 2],
    terms: Vec<([f64; 2], Vector<N>, Vector<N>)>,
}

impl<const N: usize> SmoothNoise<N> {
    pub fn new(rng: &mut SplitMix64, periods: [f64; 2], max_mode: i32, amplitude: f64) -> Self {
        let mut terms = Vec::new();
        for k1 in 0..=max_mode {
            for k2 in -max_mode..=max_mode {
                if k1 == 0 && k2 < 0 {
                    continue;
                }
                let w = amplitude / (1.0 + (k1 * k1 + k2 * k2) as f64);
                let c = Vector::<N>::from_fn(|_, _| rng.normal() * w);
                let s = Vector::<N>::from_fn(|_, _| rng.normal() * w);
                let freq = [
                    std::f64::consts::TAU * k1 as f64 / periods[0],
                    std::f64::consts::TAU * k2 as f64 / periods[1],
                ];
                terms.push((freq, c, s));
            }
        }
        Self { periods, terms }
    }

    pub fn periods(&self) -> [f64; 2] {
        self.periods
    }

    pub fn eval(&self, p: &Vector<2>) -> Vector<N> {
        let mut out = Vector::<N>::zeros();
        for (freq, c, s) in &self.terms {
            let (sn, cs) = (freq[0] * p[0] + freq[1] * p[1]).sin_cos();
            out += c * cs + s * sn;
        }
        out
    }
}

/// Source data cached per node.
#[derive(Clone, Copy, Debug)]
pub struct SourceNode {
    pub sigma: Vector<2>,
    pub g: Matrix<2>,
    pub g_inv: Matrix<2>,
    pub j: Matrix<2>,
    pub omega: Matrix<2>,
    pub gamma: Tensor3<2>,
    pub sqrt_det: f64,
}

/// Value, first and second derivatives of a map at one node.
#[derive(Clone, Copy, Debug)]
pub struct NodeJet<const N: usize> {
    pub y: Vector<N>,
    pub tf: TangentMap<N>,
    /// `second[α][β] = f_{αβ}`.
    pub second: [[Vector<N>; 2]; 2],
}

/// Grid plus source and target models: the discrete space of maps.
#[derive(Clone, Debug)]
pub struct MapSpace<S, T, const N: usize> {
    pub source: S,
    pub target: T,
    grid: GridSpec,
    order: StencilOrder,
    nodes: Vec<SourceNode>,
}

const FIRST_4: [(isize, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
const SECOND_4: [(isize, f64); 5] = [(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];

impl<S: SourceSurface, T: TargetManifold<N>, const N: usize> MapSpace<S, T, N> {
    pub fn new(source: S, target: T, n: [usize; 2], order: StencilOrder) -> Result<Self> {
        let grid = GridSpec::new(n[0], n[1], source.periods())?;
        let mut nodes = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let (i, j) = grid.node(k);
            let sigma = grid.coord(i, j);
            let g = source.metric(&sigma);
            let g_inv = source.metric_inverse(&sigma).map_err(|e| e.at_node((i, j)))?;
            nodes.push(SourceNode {
                sigma,
                g,
                g_inv,
                j: source.complex_structure(&sigma),
                omega: source.fundamental_form(&sigma),
                gamma: source.christoffel(&sigma).map_err(|e| e.at_node((i, j)))?,
                sqrt_det: (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).sqrt(),
            });
        }
        Ok(Self {
            source,
            target,
            grid,
            order,
            nodes,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    pub fn source_node(&self, k: usize) -> &SourceNode {
        &self.nodes[k]
    }

    /// Sample `f(σ)` at the nodes.
    pub fn sample(&self, twist: TwistData, f: impl Fn(&Vector<2>) -> Vector<N>) -> MapField<N> {
        MapField {
            grid: self.grid,
            twist,
            values: self.nodes.iter().map(|n| f(&n.sigma)).collect(),
        }
    }

    pub fn sample_variation(&self, v: impl Fn(&Vector<2>) -> Vector<N>) -> VariationField<N> {
        VariationField {
            grid: self.grid,
            values: self.nodes.iter().map(|n| v(&n.sigma)).collect(),
        }
    }

    /// Smooth random variation along `f` with lowest Fourier modes only,
    /// normalized to `sup |v|_h = amplitude`. Built as a periodic field times
    /// the target's length scale, so it transforms like a tangent field under
    /// the deck action of the built-in targets.
    pub fn random_variation(&self, f: &MapField<N>, rng: &mut SplitMix64, amplitude: f64) -> VariationField<N> {
        let noise = SmoothNoise::<N>::new(rng, self.grid.periods, 1, 1.0);
        let mut values: Vec<Vector<N>> = self
            .nodes
            .iter()
            .zip(&f.values)
            .map(|(n, y)| noise.eval(&n.sigma) * self.target.length_scale(y))
            .collect();
        let sup = values
            .iter()
            .zip(&f.values)
            .map(|(v, y)| v.dot(&(self.target.metric(y) * v)).sqrt())
            .fold(0.0_f64, f64::max);
        if sup > 0.0 {
            for v in &mut values {
                *v *= amplitude / sup;
            }
        }
        VariationField {
            grid: self.grid,
            values,
        }
    }

    /// Grid, twist and chart-domain checks on every node.
    pub fn validate(&self, f: &MapField<N>) -> Result<()> {
        self.check_grid(&f.grid, f.values.len())?;
        f.twist.validate(self.target.deck_rank())?;
        for (k, y) in f.values.iter().enumerate() {
            let node = self.grid.node(k);
            if !y.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite { node });
            }
            self.target.check_point(y).map_err(|e| e.at_node(node))?;
        }
        Ok(())
    }

    fn check_grid(&self, grid: &GridSpec, len: usize) -> Result<()> {
        if *grid != self.grid || len != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "field on {:?} ({} values), space on {:?}",
                grid.n, len, self.grid.n
            )));
        }
        Ok(())
    }

    /// Value at an unwrapped index pair, applying the deck action across seams.
    pub fn value(&self, f: &MapField<N>, i: isize, j: isize) -> Vector<N> {
        let ((a, b), wraps) = self.grid.wrap(i, j);
        let y = f.values[self.grid.index(a, b)];
        if wraps == [0, 0] {
            y
        } else {
            self.target.deck_point(&y, f.twist.deck_for(wraps))
        }
    }

    fn offset(&self, f: &MapField<N>, i: usize, j: usize, di: isize, dj: isize) -> Vector<N> {
        self.value(f, i as isize + di, j as isize + dj)
    }

    /// First and second derivatives at node `(i, j)`.
    pub fn node_jet(&self, f: &MapField<N>, i: usize, j: usize) -> NodeJet<N> {
        let [hs, ht] = self.grid.spacing();
        let y = f.get(i, j);
        let at = |di, dj| self.offset(f, i, j, di, dj);
        let mut tf = TangentMap::<N>::zeros();
        let mut second = [[Vector::<N>::zeros(); 2]; 2];
        match self.order {
            StencilOrder::Second => {
                let (sp, sm, tp, tm) = (at(1, 0), at(-1, 0), at(0, 1), at(0, -1));
                tf.set_column(0, &((sp - sm) / (2.0 * hs)));
                tf.set_column(1, &((tp - tm) / (2.0 * ht)));
                second[0][0] = (sp - y * 2.0 + sm) / (hs * hs);
                second[1][1] = (tp - y * 2.0 + tm) / (ht * ht);
                second[0][1] = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hs * ht);
            }
            StencilOrder::Fourth => {
                let mut ds = Vector::<N>::zeros();
                let mut dt = Vector::<N>::zeros();
                for (o, w) in FIRST_4 {
                    ds += at(o, 0) * w;
                    dt += at(0, o) * w;
                }
                tf.set_column(0, &(ds / (12.0 * hs)));
                tf.set_column(1, &(dt / (12.0 * ht)));
                let mut ss = Vector::<N>::zeros();
                let mut tt = Vector::<N>::zeros();
                for (o, w) in SECOND_4 {
                    ss += at(o, 0) * w;
                    tt += at(0, o) * w;
                }
                second[0][0] = ss / (12.0 * hs * hs);
                second[1][1] = tt / (12.0 * ht * ht);
                let mut st = Vector::<N>::zeros();
                for (a, wa) in FIRST_4 {
                    for (b, wb) in FIRST_4 {
                        st += at(a, b) * (wa * wb);
                    }
                }
                second[0][1] = st / (144.0 * hs * ht);
            }
        }
        second[1][0] = second[0][1];
        NodeJet { y, tf, second }
    }

    /// `Tf` at every node.
    pub fn derivative(&self, f: &MapField<N>) -> Vec<TangentMap<N>> {
        (0..self.grid.len())
            .map(|k| {
                let (i, j) = self.grid.node(k);
                self.node_jet(f, i, j).tf
            })
            .collect()
    }

    /// Validated jets at every node.
    pub fn jets(&self, f: &MapField<N>) -> Result<Vec<NodeJet<N>>> {
        self.validate(f)?;
        Ok((0..self.grid.len())
            .map(|k| {
                let (i, j) = self.grid.node(k);
                self.node_jet(f, i, j)
            })
            .collect())
    }

    /// Periodic derivative of a deck-invariant source one-form given by its
    /// node components; returns `(dβ)_{01}` per node.
    pub fn exterior_derivative_1form(&self, beta: &[[f64; 2]]) -> Vec<f64> {
        let [hs, ht] = self.grid.spacing();
        let at = |i: usize, j: usize, di: isize, dj: isize, c: usize| {
            let ((a, b), _) = self.grid.wrap(i as isize + di, j as isize + dj);
            beta[self.grid.index(a, b)][c]
        };
        (0..self.grid.len())
            .map(|k| {
                let (i, j) = self.grid.node(k);
                let (d0b1, d1b0) = match self.order {
                    StencilOrder::Second => (
                        (at(i, j, 1, 0, 1) - at(i, j, -1, 0, 1)) / (2.0 * hs),
                        (at(i, j, 0, 1, 0) - at(i, j, 0, -1, 0)) / (2.0 * ht),
                    ),
                    StencilOrder::Fourth => {
                        let (mut a, mut b) = (0.0, 0.0);
                        for (o, w) in FIRST_4 {
                            a += w * at(i, j, o, 0, 1);
                            b += w * at(i, j, 0, o, 0);
                        }
                        (a / (12.0 * hs), b / (12.0 * ht))
                    }
                };
                d0b1 - d1b0
            })
            .collect()
    }

    /// `(f*ω)_{αβ} = f^i_α f^j_β ω_{ij}(f)` at every node.
    pub fn pullback_two_form(
        &self,
        f: &MapField<N>,
        omega: impl Fn(&Vector<N>) -> Matrix<N>,
    ) -> Result<Vec<Matrix<2>>> {
        self.validate(f)?;
        Ok(self
            .derivative(f)
            .iter()
            .zip(&f.values)
            .map(|(tf, y)| tf.transpose() * omega(y) * tf)
            .collect())
    }

    /// Pullback of the target fundamental form.
    pub fn pullback_fundamental_form(&self, f: &MapField<N>) -> Result<Vec<Matrix<2>>> {
        self.pullback_two_form(f, |y| self.target.fundamental_form(y))
    }

    /// `∫ density dV_g` over the fundamental domain.
    pub fn integrate(&self, density: &[f64]) -> f64 {
        integrate_on(&self.grid, &self.nodes, density)
    }

    /// Node-wise retraction `f ⊕ εv`.
    pub fn perturb(&self, f: &MapField<N>, v: &VariationField<N>, eps: f64) -> Result<MapField<N>> {
        self.check_grid(&v.grid, v.values.len())?;
        let values = f
            .values
            .iter()
            .zip(&v.values)
            .enumerate()
            .map(|(k, (y, dv))| {
                self.target
                    .retract(y, &(dv * eps))
                    .map_err(|e| e.at_node(self.grid.node(k)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MapField {
            grid: f.grid,
            twist: f.twist,
            values,
        })
    }

    /// Point on the homotopy from `f0` (t = 0) to `f1` (t = 1).
    pub fn homotopy_path(&self, f0: &MapField<N>, f1: &MapField<N>, t: f64) -> Result<MapField<N>> {
        self.check_grid(&f0.grid, f0.values.len())?;
        self.check_grid(&f1.grid, f1.values.len())?;
        if f0.twist != f1.twist {
            return Err(Error::IncompatibleHomotopy(format!(
                "twist {:?} vs {:?}",
                f0.twist, f1.twist
            )));
        }
        if t == 0.0 {
            return Ok(f0.clone());
        }
        if t == 1.0 {
            return Ok(f1.clone());
        }
        let values = f0
            .values
            .iter()
            .zip(&f1.values)
            .enumerate()
            .map(|(k, (a, b))| {
                self.target
                    .interpolate(a, b, t)
                    .map_err(|e| e.at_node(self.grid.node(k)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MapField {
            grid: f0.grid,
            twist: f0.twist,
            values,
        })
    }
}

/// Quadrature on a uniform periodic grid: node sum times cell area times
/// `√det g`, with compensated summation.
pub fn integrate<S: SourceSurface>(grid: &GridSpec, source: &S, density: &[f64]) -> f64 {
    compensated_sum(density.iter().enumerate().map(|(k, d)| {
        let (i, j) = grid.node(k);
        let g = source.metric(&grid.coord(i, j));
        d * (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).sqrt()
    })) * grid.cell_area()
}

fn integrate_on(grid: &GridSpec, nodes: &[SourceNode], density: &[f64]) -> f64 {
    debug_assert_eq!(density.len(), nodes.len());
    compensated_sum(density.iter().zip(nodes).map(|(d, n)| d * n.sqrt_det)) * grid.cell_area()
}
