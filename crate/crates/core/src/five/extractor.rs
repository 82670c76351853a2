use alloc::vec::Vec;

use super::{
    evaluate_nll, five_iteration, head_residual, max_filter_change, prewhiten, project_back,
    DemixingState, FiveConfig, DEFAULT_EARLY_STOP,
};
use crate::contrast::ContrastModel;
use crate::error::FiveError;
use crate::tensor::{SourceSpectrum, SpectralTensor};

/// Per-iteration diagnostics. Row 0 describes the initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub nll: Option<f64>,
    pub head_residual: Option<f64>,
    pub max_filter_change: f64,
    /// Time spent in the update itself, excluding monitoring.
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExtractionReport {
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl ExtractionReport {
    pub fn nll_sequence(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.nll).collect()
    }
}

/// Drives the iteration on one mixture.
///
/// Construction pre-whitens the mixture; whitening is never refreshed.
#[derive(Clone, Debug)]
pub struct Extractor {
    config: FiveConfig,
    contrast: ContrastModel,
    whitened: SpectralTensor,
    state: DemixingState,
    last_change: f64,
}

impl Extractor {
    pub fn new(mixture: &SpectralTensor, config: FiveConfig) -> Result<Self, FiveError> {
        config.validate()?;
        let (whitened, whiteners) = prewhiten(mixture, config.regularization)?;
        let state = DemixingState::initial(&whitened, whiteners, config.reference_channel)?;
        let contrast = ContrastModel::new(config.contrast, mixture.bins());
        Ok(Self {
            config,
            contrast,
            whitened,
            state,
            last_change: f64::INFINITY,
        })
    }

    pub fn config(&self) -> &FiveConfig {
        &self.config
    }

    pub fn contrast(&self) -> &ContrastModel {
        &self.contrast
    }

    pub fn whitened(&self) -> &SpectralTensor {
        &self.whitened
    }

    pub fn state(&self) -> &DemixingState {
        &self.state
    }

    /// Runs one iteration and returns `max_f ||dw_f||`.
    pub fn step(&mut self) -> Result<f64, FiveError> {
        let next = five_iteration(&self.state, &self.whitened, &self.contrast, &self.config)?;
        self.last_change = max_filter_change(&self.state, &next);
        self.state = next;
        Ok(self.last_change)
    }

    pub fn nll(&self) -> f64 {
        evaluate_nll(&self.state, &self.whitened, &self.contrast, self.config.activity_floor)
    }

    pub fn head_residual(&self) -> f64 {
        head_residual(&self.state, &self.whitened, &self.contrast, self.config.activity_floor)
    }

    /// Current estimate rescaled onto the reference channel of `original`.
    pub fn output(&self, original: &SpectralTensor) -> Result<SourceSpectrum, FiveError> {
        project_back(
            &self.state.extracted,
            original,
            self.config.reference_channel,
            self.config.activity_floor,
        )
    }

    fn monitor(&self, iteration: usize, change: f64, wall_time_ms: f64) -> IterationRecord {
        let (nll, residual) = if self.config.nll_monitoring {
            (Some(self.nll()), Some(self.head_residual()))
        } else {
            (None, None)
        };
        IterationRecord {
            iteration,
            nll,
            head_residual: residual,
            max_filter_change: change,
            wall_time_ms,
        }
    }

    /// Iterates up to `max_iterations` times, stopping early when configured.
    /// `clock` returns milliseconds from an arbitrary origin.
    pub fn run_with_clock(
        &mut self,
        clock: &mut dyn FnMut() -> f64,
    ) -> Result<ExtractionReport, FiveError> {
        let mut report = ExtractionReport::default();
        report
            .records
            .push(self.monitor(self.state.iteration, f64::INFINITY, 0.0));
        let stop = self.config.early_stop;
        for _ in 0..self.config.max_iterations {
            let start = clock();
            let change = self.step()?;
            let elapsed = clock() - start;
            report
                .records
                .push(self.monitor(self.state.iteration, change, elapsed));
            report.iterations += 1;
            if stop.is_some_and(|tol| change < tol) {
                break;
            }
        }
        report.converged = self.last_change < stop.unwrap_or(DEFAULT_EARLY_STOP);
        Ok(report)
    }

    #[cfg(feature = "std")]
    pub fn run(&mut self) -> Result<ExtractionReport, FiveError> {
        let origin = std::time::Instant::now();
        self.run_with_clock(&mut || origin.elapsed().as_secs_f64() * 1e3)
    }
}

/// Whitens, iterates and projects back; returns the extracted spectrum
/// scaled to the reference channel.
pub fn extract_spectral_with_clock(
    mixture: &SpectralTensor,
    config: FiveConfig,
    clock: &mut dyn FnMut() -> f64,
) -> Result<(SourceSpectrum, ExtractionReport), FiveError> {
    let mut extractor = Extractor::new(mixture, config)?;
    let report = extractor.run_with_clock(clock)?;
    Ok((extractor.output(mixture)?, report))
}

#[cfg(feature = "std")]
pub fn extract_spectral(
    mixture: &SpectralTensor,
    config: FiveConfig,
) -> Result<(SourceSpectrum, ExtractionReport), FiveError> {
    let origin = std::time::Instant::now();
    extract_spectral_with_clock(mixture, config, &mut || origin.elapsed().as_secs_f64() * 1e3)
}
