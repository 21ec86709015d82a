use std::io::Write;

use serde::{Deserialize, Serialize};

use super::acquisition::maximize_acquisition;
use super::gp::{fit_preference_gp, Kernel, PreferenceGP, PreferencePair, MERGE_TOL};
use crate::{stats, DesignPoint, DesignSpace, Error, Goodness, Result, Rng, SliderSpace};

/// Segments shorter than this are replaced by a random one.
const MIN_SLIDER_LENGTH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    pub amplitude: f64,
    pub lengthscale: f64,
    /// Standard deviation of the probit preference noise.
    pub pref_noise: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self { amplitude: 1.0, lengthscale: 0.5, pref_noise: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptConfig {
    pub iterations: usize,
    /// Slider microtasks opened per iteration.
    pub tasks_per_iteration: usize,
    /// Distinct responses needed before an iteration advances.
    pub quorum: usize,
    /// Uniform draws when searching for the EI maximizer.
    pub acquisition_samples: usize,
    /// Evaluation budget of the local EI refinement.
    pub refine_steps: usize,
    /// Offset along the slider of the two extra points the chosen point is
    /// preferred over.
    pub probe_offset: f64,
    pub gp: GpConfig,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            iterations: 15,
            tasks_per_iteration: 7,
            quorum: 5,
            acquisition_samples: 1000,
            refine_steps: 200,
            probe_offset: 0.25,
            gp: GpConfig::default(),
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::argument("iterations must be at least 1"));
        }
        if self.quorum == 0 {
            return Err(Error::argument("quorum must be at least 1"));
        }
        if self.quorum > self.tasks_per_iteration {
            return Err(Error::argument(format!(
                "quorum {} exceeds tasks_per_iteration {}",
                self.quorum, self.tasks_per_iteration
            )));
        }
        if self.acquisition_samples == 0 {
            return Err(Error::argument("acquisition_samples must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.probe_offset) {
            return Err(Error::argument("probe_offset must be in [0, 1]"));
        }
        let g = &self.gp;
        if !(g.amplitude > 0.0 && g.lengthscale > 0.0 && g.pref_noise > 0.0) {
            return Err(Error::argument("GP amplitude, lengthscale and pref_noise must be positive"));
        }
        Ok(())
    }

    fn kernel(&self, n: usize) -> Kernel {
        Kernel::isotropic(n, self.gp.amplitude, self.gp.lengthscale)
    }
}

/// One completed iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    pub slider: SliderSpace,
    pub t_aggregated: f64,
    pub chosen: DesignPoint,
    /// `x+` after refitting with this iteration's preferences.
    pub best: DesignPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    space: DesignSpace,
    config: OptConfig,
    iteration: usize,
    slider: SliderSpace,
    pairs: Vec<PreferencePair>,
    gp: Option<PreferenceGP>,
    history: Vec<IterationRecord>,
    rng: Rng,
}

fn random_segment(space: &DesignSpace, rng: &mut Rng) -> SliderSpace {
    let a = space.sample(rng);
    loop {
        let b = space.sample(rng);
        if a.linf_distance(&b) > MERGE_TOL {
            return SliderSpace::new(a, b).expect("endpoints are distinct");
        }
    }
}

/// Starts an optimization with a random slider between two distinct points.
pub fn init_session(space: DesignSpace, config: OptConfig, mut rng: Rng) -> Result<OptState> {
    config.validate()?;
    let slider = random_segment(&space, &mut rng);
    Ok(OptState { space, config, iteration: 0, slider, pairs: Vec::new(), gp: None, history: Vec::new(), rng })
}

/// The slider for the next iteration: from `x+` to the EI maximizer.
pub fn next_slider_space(gp: &PreferenceGP, space: &DesignSpace, config: &OptConfig, rng: &mut Rng) -> Result<SliderSpace> {
    let a = gp.best_point().clone();
    let mut b = maximize_acquisition(gp, space, config.acquisition_samples, config.refine_steps, rng)?;
    while a.distance(&b) < MIN_SLIDER_LENGTH {
        b = space.sample(rng);
    }
    SliderSpace::new(a, b)
}

/// Median of the reported slider positions.
pub fn aggregate_responses(responses: &[f64]) -> Result<f64> {
    if let Some(t) = responses.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Range(format!("slider response {t} is outside [0, 1]")));
    }
    stats::median(responses).ok_or_else(|| Error::argument("no responses to aggregate"))
}

impl OptState {
    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn config(&self) -> &OptConfig {
        &self.config
    }

    /// Number of completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_complete(&self) -> bool {
        self.iteration >= self.config.iterations
    }

    /// The slider currently shown to workers.
    pub fn slider(&self) -> &SliderSpace {
        &self.slider
    }

    pub fn gp(&self) -> Option<&PreferenceGP> {
        self.gp.as_ref()
    }

    pub fn pairs(&self) -> &[PreferencePair] {
        &self.pairs
    }

    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    /// `x+`, available once at least one iteration has completed.
    pub fn best_design(&self) -> Result<&DesignPoint> {
        self.gp
            .as_ref()
            .map(PreferenceGP::best_point)
            .ok_or_else(|| Error::State("no iteration has completed yet".into()))
    }

    /// Completes the current iteration with the aggregated slider value `t`.
    pub fn step(&mut self, t: f64) -> Result<&IterationRecord> {
        if self.is_complete() {
            return Err(Error::State(format!("all {} iterations are done", self.config.iterations)));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Range(format!("slider value {t} is outside [0, 1]")));
        }
        let slider = self.slider.clone();
        let chosen = slider.at(t);
        let off = self.config.probe_offset;
        let losers = [
            slider.a().clone(),
            slider.b().clone(),
            slider.at((t - off).max(0.0)),
            slider.at((t + off).min(1.0)),
        ];
        let mut added: Vec<&DesignPoint> = Vec::with_capacity(4);
        for loser in &losers {
            if loser.approx_eq(&chosen, MERGE_TOL) || added.iter().any(|q| q.approx_eq(loser, MERGE_TOL)) {
                continue;
            }
            added.push(loser);
            self.pairs.push(PreferencePair::new(chosen.clone(), loser.clone())?);
        }

        let kernel = self.config.kernel(self.space.dim());
        let gp = fit_preference_gp(&self.pairs, &kernel, self.config.gp.pref_noise)?;
        let next = next_slider_space(&gp, &self.space, &self.config, &mut self.rng)?;
        self.iteration += 1;
        self.history.push(IterationRecord {
            iteration: self.iteration,
            slider,
            t_aggregated: t,
            chosen,
            best: gp.best_point().clone(),
        });
        self.gp = Some(gp);
        self.slider = next;
        Ok(self.history.last().expect("just pushed"))
    }
}

/// Writes `iteration,t_aggregated,x_chosen_*,x_best_*,true_g` rows. The last
/// column is left empty when no ground truth is given.
pub fn write_trace_csv<W: Write, G: Goodness>(mut w: W, history: &[IterationRecord], truth: Option<&G>) -> Result<()> {
    let n = history.first().map_or(0, |r| r.chosen.dim());
    let mut header = vec!["iteration".to_string(), "t_aggregated".to_string()];
    header.extend((0..n).map(|d| format!("x_chosen_{d}")));
    header.extend((0..n).map(|d| format!("x_best_{d}")));
    header.push("true_g".into());
    writeln!(w, "{}", header.join(","))?;
    for r in history {
        let mut row = vec![r.iteration.to_string(), r.t_aggregated.to_string()];
        row.extend(r.chosen.coords().iter().map(f64::to_string));
        row.extend(r.best.coords().iter().map(f64::to_string));
        row.push(truth.map(|g| g.eval_raw(r.best.coords()).to_string()).unwrap_or_default());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::Rng;

    fn state(n: usize, seed: u64) -> OptState {
        init_session(DesignSpace::new(n).unwrap(), OptConfig::default(), Rng::new(seed)).unwrap()
    }

    #[test]
    fn init_is_valid_and_deterministic() {
        let s = state(2, 1);
        assert_eq!(s.iteration(), 0);
        assert!(s.gp().is_none());
        assert_ne!(s.slider().a(), s.slider().b());
        assert_eq!(state(6, 5).slider(), state(6, 5).slider());
    }

    #[test]
    fn init_redraws_coincident_points() {
        // Whatever the seed, the 1-D endpoints are distinct.
        for seed in 0..200 {
            let s = state(1, seed);
            assert!(s.slider().a().linf_distance(s.slider().b()) > 1e-9);
        }
    }

    #[test]
    fn config_validation() {
        let cfg = OptConfig { quorum: 8, ..Default::default() };
        assert!(init_session(DesignSpace::new(2).unwrap(), cfg, Rng::new(0)).is_err());
        let cfg = OptConfig { iterations: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn aggregation_examples() {
        assert_eq!(aggregate_responses(&[0.2, 0.8, 0.5]).unwrap(), 0.5);
        assert_eq!(aggregate_responses(&[0.4, 0.6]).unwrap(), 0.5);
        assert_eq!(aggregate_responses(&[0.31, 0.30, 0.29, 0.95, 0.02]).unwrap(), 0.30);
        assert!(aggregate_responses(&[]).is_err());
        assert!(aggregate_responses(&[1.2]).is_err());
    }

    #[test]
    fn step_at_endpoint_skips_coincident_pair() {
        let mut s = state(2, 3);
        let (a, b) = (s.slider().a().clone(), s.slider().b().clone());
        s.step(0.0).unwrap();
        let losers: Vec<&DesignPoint> = s.pairs().iter().map(|p| &p.loser).collect();
        assert!(s.pairs().iter().all(|p| p.winner == a));
        assert_eq!(losers.len(), 2);
        assert!(losers.contains(&&b));
        assert!(!losers.contains(&&a));
    }

    #[test]
    fn step_bookkeeping_and_best() {
        let mut s = state(2, 4);
        assert!(s.best_design().is_err());
        let chosen = s.step(0.6).unwrap().chosen.clone();
        assert_eq!(s.iteration(), 1);
        assert_eq!(s.history().len(), 1);
        assert_eq!(s.best_design().unwrap(), &chosen);
        assert_eq!(s.slider().a(), &chosen);
        s.step(0.3).unwrap();
        assert_eq!(s.iteration(), 2);
        assert_eq!(s.slider().a(), s.gp().unwrap().best_point());
        assert!(s.step(1.5).is_err());
    }

    #[test]
    fn completed_state_refuses_steps() {
        let cfg = OptConfig { iterations: 1, ..Default::default() };
        let mut s = init_session(DesignSpace::new(1).unwrap(), cfg, Rng::new(0)).unwrap();
        s.step(0.5).unwrap();
        assert!(s.is_complete());
        assert!(matches!(s.step(0.5), Err(Error::State(_))));
    }

    #[test]
    fn trace_csv_layout() {
        let mut s = state(2, 4);
        s.step(0.5).unwrap();
        let mut out = Vec::new();
        write_trace_csv::<_, crate::sim_crowd::SynthGoodness>(&mut out, s.history(), None).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iteration,t_aggregated,x_chosen_0,x_chosen_1,x_best_0,x_best_1,true_g"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 7);
        assert_eq!(row[0], "1");
        assert_eq!(row[6], "");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn median_ignores_order(mut v in prop::collection::vec(0.0f64..=1.0, 1..9), seed in any::<u64>()) {
            let before = aggregate_responses(&v).unwrap();
            let mut rng = Rng::new(seed);
            for i in (1..v.len()).rev() {
                let j = rng.index(i + 1);
                v.swap(i, j);
            }
            prop_assert_eq!(before, aggregate_responses(&v).unwrap());
        }

        #[test]
        fn slider_starts_at_argmax_mean(ts in prop::collection::vec(0.0f64..=1.0, 1..5), seed in 0u64..1000) {
            let cfg = OptConfig { acquisition_samples: 200, refine_steps: 50, ..Default::default() };
            let mut s = init_session(DesignSpace::new(2).unwrap(), cfg, Rng::new(seed)).unwrap();
            for t in ts {
                s.step(t).unwrap();
                let gp = s.gp().unwrap();
                let means: Vec<f64> = gp.data_points().iter().map(|x| gp.predict(x).unwrap().0).collect();
                let top = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let first = means.iter().position(|&m| m == top).unwrap();
                prop_assert_eq!(s.slider().a(), &gp.data_points()[first]);
            }
        }
    }
}
