use nalgebra::DVector;

/// A fixed-point iteration `x ← G(x)`, typically one EM or MM step.
///
/// `map` signals failure by returning non-finite entries. Problems with a
/// natural objective (a log-likelihood, say) expose it through `merit`, which
/// every monotonicity-controlled method maximizes. `is_feasible` lets
/// extrapolated points outside the parameter space be rejected before they
/// are ever passed to `map` or `merit`.
pub trait FixedPointProblem {
    fn dim(&self) -> usize;

    fn map(&self, x: &DVector<f64>) -> DVector<f64>;

    fn has_merit(&self) -> bool {
        false
    }

    /// Objective to maximize. Only called when `has_merit` is true.
    fn merit(&self, _x: &DVector<f64>) -> f64 {
        f64::NAN
    }

    fn is_feasible(&self, _x: &DVector<f64>) -> bool {
        true
    }
}

impl<P: FixedPointProblem + ?Sized> FixedPointProblem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn map(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).map(x)
    }
    fn has_merit(&self) -> bool {
        (**self).has_merit()
    }
    fn merit(&self, x: &DVector<f64>) -> f64 {
        (**self).merit(x)
    }
    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        (**self).is_feasible(x)
    }
}

type MapFn<'a> = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'a>;
type MeritFn<'a> = Box<dyn Fn(&DVector<f64>) -> f64 + Send + Sync + 'a>;
type FeasibleFn<'a> = Box<dyn Fn(&DVector<f64>) -> bool + Send + Sync + 'a>;

/// Closure-backed problem for maps that don't warrant their own type.
///
/// ```
/// use daarem::{FnProblem, FixedPointProblem};
/// use nalgebra::DVector;
///
/// let half = FnProblem::new(1, |x: &DVector<f64>| x * 0.5)
///     .with_merit(|x: &DVector<f64>| -x[0] * x[0]);
/// assert!(half.has_merit());
/// assert_eq!(half.map(&DVector::from_element(1, 2.0))[0], 1.0);
/// ```
pub struct FnProblem<'a> {
    dim: usize,
    map: MapFn<'a>,
    merit: Option<MeritFn<'a>>,
    feasible: Option<FeasibleFn<'a>>,
}

impl<'a> FnProblem<'a> {
    pub fn new(dim: usize, map: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'a) -> Self {
        Self {
            dim,
            map: Box::new(map),
            merit: None,
            feasible: None,
        }
    }

    pub fn with_merit(mut self, merit: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'a) -> Self {
        self.merit = Some(Box::new(merit));
        self
    }

    pub fn with_feasibility(
        mut self,
        feasible: impl Fn(&DVector<f64>) -> bool + Send + Sync + 'a,
    ) -> Self {
        self.feasible = Some(Box::new(feasible));
        self
    }
}

impl FixedPointProblem for FnProblem<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn map(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.map)(x)
    }

    fn has_merit(&self) -> bool {
        self.merit.is_some()
    }

    fn merit(&self, x: &DVector<f64>) -> f64 {
        self.merit.as_ref().map_or(f64::NAN, |m| m(x))
    }

    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        self.feasible.as_ref().is_none_or(|f| f(x))
    }
}

pub(crate) fn all_finite(x: &DVector<f64>) -> bool {
    x.iter().all(|v| v.is_finite())
}
