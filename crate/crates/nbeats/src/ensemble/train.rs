//! Multi-member ensemble training. Members are independent and train
//! concurrently; a failed member is recorded and skipped so long runs never
//! lose completed work.

use std::time::Instant;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::ensemble::{plan_members, Ensemble, EnsembleSpec, Member, MemberMeta, MemberPlan};
use crate::error::{Error, Result};
use crate::model::AnyModel;
use crate::training::sampler::TrainView;
use crate::training::trainer::{train_member, TracePoint};
use crate::training::Precision;

/// A member that did not finish training.
#[derive(Clone, Debug)]
pub struct MemberFailure {
    pub index: usize,
    pub error: String,
}

/// A trained member plus its loss trace and wall-clock time.
pub struct TrainedMember {
    pub member: Member,
    pub trace: Vec<TracePoint>,
    pub wall_clock_s: f64,
}

fn train_one(ds: &Dataset, plan: &MemberPlan) -> Result<TrainedMember> {
    let indices = ds.by_frequency(plan.frequency);
    if indices.is_empty() {
        return Err(Error::NoMembersForFrequency(plan.frequency.name().into()));
    }
    let view = TrainView::from_dataset(ds, &indices);
    let started = Instant::now();
    let (model, trace) = match plan.train.precision {
        Precision::F64 => {
            let out = train_member::<f64>(&view, &plan.model, &plan.grid, &plan.train)?;
            (AnyModel::F64(out.model), out.trace)
        }
        Precision::F32 => {
            let out = train_member::<f32>(&view, &plan.model, &plan.grid, &plan.train)?;
            (AnyModel::F32(out.model), out.trace)
        }
    };
    Ok(TrainedMember {
        member: Member {
            meta: MemberMeta {
                index: plan.index,
                frequency: plan.frequency,
                loss: plan.loss,
                repeat: plan.repeat,
                lookback: plan.lookback,
                horizon: plan.horizon,
                seed: plan.train.seed,
                iterations: plan.train.iterations,
                scale_mode: plan.train.scale_mode,
            },
            model,
        },
        trace,
        wall_clock_s: started.elapsed().as_secs_f64(),
    })
}

/// Train every member of the grid. `threads = 0` uses all available cores;
/// parallelism is member-level only, so results do not depend on the
/// thread count.
pub fn train_ensemble(
    ds: &Dataset,
    spec: &EnsembleSpec,
    master_seed: u64,
    threads: usize,
) -> Result<(Ensemble, Vec<TrainedMember>, Vec<MemberFailure>)> {
    let plans = plan_members(spec, master_seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let results: Vec<(usize, Result<TrainedMember>)> = pool.install(|| {
        plans
            .par_iter()
            .map(|plan| (plan.index, train_one(ds, plan)))
            .collect()
    });

    let mut trained = Vec::new();
    let mut failures = Vec::new();
    for (index, result) in results {
        match result {
            Ok(t) => trained.push(t),
            Err(e) => {
                log::warn!("member {index} failed: {e}");
                failures.push(MemberFailure {
                    index,
                    error: e.to_string(),
                });
            }
        }
    }
    if trained.is_empty() {
        return Err(Error::NoMembers);
    }
    trained.sort_by_key(|t| t.member.meta.index);
    let members = trained.iter().map(|t| t.member.clone()).collect();
    Ok((
        Ensemble {
            spec: spec.clone(),
            master_seed,
            members,
        },
        trained,
        failures,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Frequency, TimeSeries};
    use crate::ensemble::{LossKind, ModelPreset};
    use crate::model::ModelConfig;

    fn tiny_dataset() -> Dataset {
        let series = (0..4)
            .map(|i| TimeSeries {
                id: format!("Y{i}"),
                values: (0..40).map(|t| 20.0 + (i + 1) as f64 * t as f64).collect(),
                frequency: Frequency::Yearly,
                m: 1,
                horizon: 4,
            })
            .collect();
        Dataset::new(series)
    }

    fn tiny_spec() -> EnsembleSpec {
        let mut spec = EnsembleSpec::new(
            ModelPreset::Custom(ModelConfig::generic_sized(2, 8)),
            vec![Frequency::Yearly],
        );
        spec.losses = vec![LossKind::Smape, LossKind::Mape];
        spec.repeats = 1;
        spec.horizon_overrides.insert(Frequency::Yearly, 4);
        spec.train.iterations = Some(5);
        spec.train.batch_size = Some(4);
        spec
    }

    #[test]
    fn trains_the_full_grid() {
        let ds = tiny_dataset();
        let (ens, trained, failures) = train_ensemble(&ds, &tiny_spec(), 7, 2).unwrap();
        assert_eq!(ens.members.len(), 2);
        assert_eq!(trained.len(), 2);
        assert!(failures.is_empty());
        assert!(ens.members.iter().all(|m| m.meta.horizon == 4));
        assert!(trained[0].wall_clock_s >= 0.0);
    }

    #[test]
    fn missing_frequency_fails_that_member_only() {
        let ds = tiny_dataset();
        let mut spec = tiny_spec();
        spec.frequencies = vec![Frequency::Yearly, Frequency::Monthly];
        let (ens, _, failures) = train_ensemble(&ds, &spec, 7, 1).unwrap();
        assert_eq!(ens.members.len(), 2);
        assert_eq!(failures.len(), 2); // two monthly members had no data
    }

    #[test]
    fn all_members_failing_is_an_error() {
        let ds = Dataset::new(vec![]);
        assert!(matches!(
            train_ensemble(&ds, &tiny_spec(), 7, 1),
            Err(Error::NoMembers)
        ));
    }

    #[test]
    fn training_is_order_independent() {
        // Same grid trained with different thread counts gives identical
        // members (seeds are index-derived).
        let ds = tiny_dataset();
        let (a, _, _) = train_ensemble(&ds, &tiny_spec(), 3, 1).unwrap();
        let (b, _, _) = train_ensemble(&ds, &tiny_spec(), 3, 2).unwrap();
        for (ma, mb) in a.members.iter().zip(&b.members) {
            assert_eq!(ma.meta.seed, mb.meta.seed);
            match (&ma.model, &mb.model) {
                (AnyModel::F64(x), AnyModel::F64(y)) => assert_eq!(x, y),
                _ => panic!("expected f64 members"),
            }
        }
    }
}
