use std::fmt;

use super::step::StepFunction;
use crate::error::{Error, Result};
use crate::rat::Rat;

type Evaluator = Box<dyn Fn(&Rat) -> Rat + Send + Sync>;

/// Samples per piece sit this fraction of the piece width inside each end.
const ENDPOINT_OFFSET: i64 = 1024;

/// A black-box function on `[0, 1]` with caller-declared integrability
/// evidence.
///
/// True infima of a black box cannot be computed, so lower sums built from
/// samples are only as good as the caller's promise; results derived from a
/// `SampledFunction` are marked conditional.
pub struct SampledFunction {
    evaluator: Evaluator,
    value_bound: Rat,
    declared_modulus: Evaluator,
}

/// A lower-sum estimate together with the caller's declared bound for the
/// same mesh. Both rest on trusting the evaluator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerSumClaim {
    pub lower_sum: Rat,
    pub declared: Rat,
    pub mesh: Rat,
    pub conditional: bool,
}

impl LowerSumClaim {
    /// Both the sampled and the declared lower bounds exceed `threshold`.
    pub fn exceeds(&self, threshold: &Rat) -> bool {
        &self.lower_sum > threshold && &self.declared > threshold
    }
}

impl SampledFunction {
    pub fn new<F, M>(evaluator: F, value_bound: Rat, declared_modulus: M) -> Self
    where
        F: Fn(&Rat) -> Rat + Send + Sync + 'static,
        M: Fn(&Rat) -> Rat + Send + Sync + 'static,
    {
        SampledFunction {
            evaluator: Box::new(evaluator),
            value_bound,
            declared_modulus: Box::new(declared_modulus),
        }
    }

    /// Wraps a step function on `[0, 1]`; the declared modulus is its exact
    /// integral, which no lower sum can exceed.
    pub fn from_step(f: StepFunction) -> Result<Self> {
        let (lo, hi) = f.domain();
        if !lo.is_zero() || hi != &Rat::one() {
            return Err(Error::NotUnitForm(format!("domain is [{lo}, {hi}]")));
        }
        let bound = f.sup_abs();
        let integral = f.integral();
        Ok(SampledFunction::new(
            move |x| f.eval(x).expect("sample points stay inside [0, 1]"),
            bound,
            move |_| integral.clone(),
        ))
    }

    pub fn value_bound(&self) -> &Rat {
        &self.value_bound
    }

    pub fn eval(&self, x: &Rat) -> Result<Rat> {
        let v = (self.evaluator)(x);
        if v.abs() > self.value_bound {
            return Err(Error::BoundViolated {
                index: None,
                value: v,
                bound: self.value_bound.clone(),
            });
        }
        Ok(v)
    }

    pub fn declared_lower_bound(&self, mesh: &Rat) -> Rat {
        (self.declared_modulus)(mesh)
    }

    /// Infimum estimate on `(lo, hi)`: the smallest of the samples just inside
    /// each end and at the midpoint.
    fn piece_inf(&self, lo: &Rat, hi: &Rat) -> Result<Rat> {
        let offset = (hi - lo) / Rat::from_int(ENDPOINT_OFFSET);
        let samples = [lo + &offset, Rat::midpoint(lo, hi), hi - &offset];
        let mut best: Option<Rat> = None;
        for s in &samples {
            let v = self.eval(s)?;
            if best.as_ref().is_none_or(|b| &v < b) {
                best = Some(v);
            }
        }
        Ok(best.expect("three samples"))
    }

    /// Lower-sum surrogate `sum(inf_estimate_i * width_i)` over `partition`.
    pub fn lower_sum(&self, partition: &[Rat]) -> Result<Rat> {
        check_partition(partition)?;
        let mut total = Rat::zero();
        for w in partition.windows(2) {
            total = total + self.piece_inf(&w[0], &w[1])? * (&w[1] - &w[0]);
        }
        Ok(total)
    }

    /// The inscribed rectangles as a step function: each piece takes its
    /// infimum estimate.
    pub fn step_minorant(&self, partition: &[Rat]) -> Result<StepFunction> {
        check_partition(partition)?;
        let values = partition
            .windows(2)
            .map(|w| self.piece_inf(&w[0], &w[1]))
            .collect::<Result<Vec<_>>>()?;
        // Breakpoint values: the smaller neighbouring rectangle height keeps
        // the minorant below the sampled function.
        let point_values = (0..partition.len())
            .map(|i| {
                let left = i.checked_sub(1).map(|j| &values[j]);
                let right = values.get(i);
                match (left, right) {
                    (Some(l), Some(r)) => Rat::min(l, r).clone(),
                    (Some(v), None) | (None, Some(v)) => v.clone(),
                    (None, None) => unreachable!("partition has at least two points"),
                }
            })
            .collect();
        StepFunction::with_point_values(partition.to_vec(), values, Some(point_values))
    }

    pub fn lower_sum_claim(&self, partition: &[Rat]) -> Result<LowerSumClaim> {
        let lower_sum = self.lower_sum(partition)?;
        let mesh = partition
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .max()
            .expect("checked partition");
        Ok(LowerSumClaim {
            lower_sum,
            declared: self.declared_lower_bound(&mesh),
            mesh,
            conditional: true,
        })
    }
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("value_bound", &self.value_bound)
            .finish_non_exhaustive()
    }
}

fn check_partition(partition: &[Rat]) -> Result<()> {
    let bad = |msg: &str| Err(Error::MalformedPartition(msg.to_string()));
    if partition.len() < 2 {
        return bad("need at least two points");
    }
    if !partition[0].is_zero() || partition[partition.len() - 1] != 1 {
        return bad("must run from 0 to 1");
    }
    if partition.windows(2).any(|w| w[0] >= w[1]) {
        return bad("must be strictly increasing");
    }
    Ok(())
}

/// `0, 1/k, 2/k, ..., 1`.
pub fn uniform_partition(k: u32) -> Vec<Rat> {
    assert!(k >= 1);
    (0..=k as i64).map(|i| Rat::new(i, k as i64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn constant_lower_sum() {
        let f = SampledFunction::new(|_| rat("1/2"), Rat::one(), |_| rat("1/2"));
        for k in [1, 3, 10] {
            assert_eq!(f.lower_sum(&uniform_partition(k)).unwrap(), rat("1/2"));
        }
    }

    #[test]
    fn wrapped_step_function_is_exact_on_refinements() {
        let step = StepFunction::new(
            vec![Rat::zero(), rat("1/3"), rat("1/2"), Rat::one()],
            vec![rat("1/4"), rat("1"), rat("1/8")],
        )
        .unwrap();
        let integral = step.integral();
        let f = SampledFunction::from_step(step).unwrap();
        // Refines 1/3 and 1/2 (denominator 6).
        let p = uniform_partition(12);
        assert_eq!(f.lower_sum(&p).unwrap(), integral);
        let claim = f.lower_sum_claim(&p).unwrap();
        assert!(claim.conditional);
        assert_eq!(claim.declared, integral);
    }

    #[test]
    fn identity_lower_sum_brackets() {
        let f = SampledFunction::new(
            |x| x.clone(),
            Rat::one(),
            |m| rat("1/2") - m / Rat::from_int(2),
        );
        let s = f.lower_sum(&uniform_partition(100)).unwrap();
        // Exact lower sum is 99/200; samples sit 1/1024 of a piece inside.
        assert!(s <= rat("1/2"));
        assert!(s >= rat("99/200"));
        assert_eq!(s, rat("99/200") + rat("1/102400"));
    }

    #[test]
    fn minorant_stays_below_samples() {
        let f = SampledFunction::new(|x| x * x, Rat::one(), |_| Rat::zero());
        let p = uniform_partition(8);
        let m = f.step_minorant(&p).unwrap();
        assert_eq!(m.integral(), f.lower_sum(&p).unwrap());
        // Below every sample the estimate was taken from.
        for w in p.windows(2) {
            let off = (&w[1] - &w[0]) / Rat::from_int(ENDPOINT_OFFSET);
            for x in [&w[0] + &off, Rat::midpoint(&w[0], &w[1]), &w[1] - &off] {
                assert!(m.eval(&x).unwrap() <= &x * &x, "at {x}");
            }
        }
    }

    #[test]
    fn malformed_partitions() {
        let f = SampledFunction::new(|_| Rat::zero(), Rat::one(), |_| Rat::zero());
        for p in [
            vec![],
            vec![Rat::zero()],
            vec![rat("1/2"), Rat::one()],
            vec![Rat::zero(), rat("1/2"), rat("1/2"), Rat::one()],
        ] {
            assert!(matches!(f.lower_sum(&p), Err(Error::MalformedPartition(_))));
        }
    }

    #[test]
    fn evaluator_outside_bound_is_reported() {
        let f = SampledFunction::new(|_| rat("2"), Rat::one(), |_| Rat::zero());
        assert!(matches!(
            f.lower_sum(&uniform_partition(2)),
            Err(Error::BoundViolated { .. })
        ));
    }
}
