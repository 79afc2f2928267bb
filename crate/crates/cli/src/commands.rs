use std::fmt::Write as _;
use std::path::Path;

use framedrop::channel::{self, Decoder};
use framedrop::dae::{self, LinearDae};
use framedrop::frames::{self, Frame};
use framedrop::spectra;
use framedrop::{ChannelConfig, Estimate};
use serde::Serialize;

use crate::config::{ChannelCommand, FrameCommand, FrameKind, FrameSource, SpectraCommand, TrainCommand, TrainMode};
use crate::CliError;

/// Tightness tolerance used in the frame analysis JSON.
const TIGHT_TOL: f64 = 1e-9;

pub fn build_frame(src: &FrameSource, seed: u64) -> Result<Frame, CliError> {
    let f = match src.kind {
        FrameKind::Simplex => frames::make_simplex_etf(src.m)?,
        FrameKind::Conference => frames::make_conference_etf(src.q)?,
        FrameKind::Gaussian => frames::make_gaussian_frame(src.m, src.n, seed)?,
        FrameKind::ApproxEtf => frames::approximate_etf(src.m, src.n, src.iters, seed)?,
        FrameKind::Lowpass => frames::make_lowpass_frame(src.m, src.n)?,
        FrameKind::File => {
            let path = src.input.as_ref().ok_or_else(|| CliError::Config("kind = file needs --input".into()))?;
            frames::normalize_columns(&Frame::read_csv(path)?)?
        }
    };
    Ok(f)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_text(dir, name, &text)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn frame(cmd: &FrameCommand, seed: u64, out: &Path) -> Result<(), CliError> {
    let f = build_frame(&cmd.source, seed)?;
    let analysis = frames::analyze(&f, TIGHT_TOL)?;
    write_text(out, "frame.csv", &f.to_csv())?;
    write_json(out, "analysis.json", &analysis)?;
    println!(
        "{}x{} frame: coherence {:.6}, welch {:.6}, tight {}",
        analysis.m,
        analysis.n,
        analysis.coherence,
        analysis.welch_bound,
        analysis.tight_c.map_or("no".to_string(), |c| format!("c = {c:.6}"))
    );
    Ok(())
}

#[derive(Serialize)]
struct ChannelReport {
    m: usize,
    n: usize,
    coherence: f64,
    mse_least_squares: Estimate,
    mse_unrolled_gd: Estimate,
    decoder_iters: usize,
    expected_inverse_trace: Estimate,
    /// `sigma_w^2 * E Tr((F_s F_s^T)^{-1})`, the predicted LS error.
    predicted_ls_mse: f64,
}

pub fn channel(cmd: &ChannelCommand, seed: u64, out: &Path) -> Result<(), CliError> {
    let f = build_frame(&cmd.source, seed)?;
    let cfg = ChannelConfig { p: cmd.p, sigma_w: cmd.sigma_w, trials: cmd.trials, seed };
    let ls = channel::mse_monte_carlo(&f, &cfg, Decoder::LeastSquares)?;
    let gd = channel::mse_monte_carlo(&f, &cfg, Decoder::UnrolledGd { iters: cmd.decoder_iters })?;
    let inv = channel::expected_inverse_trace(&f, cmd.p, cmd.trials, seed)?;
    let report = ChannelReport {
        m: f.m(),
        n: f.n(),
        coherence: frames::coherence(&f)?,
        mse_least_squares: ls,
        mse_unrolled_gd: gd,
        decoder_iters: cmd.decoder_iters,
        expected_inverse_trace: inv,
        predicted_ls_mse: cmd.sigma_w * cmd.sigma_w * inv.estimate,
    };
    write_json(out, "channel.json", &report)?;
    println!(
        "LS mse {:.4e} (±{:.1e}), GD({}) mse {:.4e}, E tr inv {:.4e}",
        ls.estimate, ls.std_error, cmd.decoder_iters, gd.estimate, inv.estimate
    );
    Ok(())
}

pub fn spectra(cmd: &SpectraCommand, seed: u64, out: &Path) -> Result<(), CliError> {
    let f = build_frame(&cmd.source, seed)?;
    let hist = spectra::empirical_spectrum(&f, cmd.p, cmd.trials, cmd.bins, seed)?;
    write_text(out, "histogram.csv", &hist.to_csv())?;
    let moments = (1..=4)
        .map(|d| spectra::moment_md(&f, cmd.p, d, cmd.moment_trials, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let csv = if cmd.exhaustive {
        let mut csv = String::from("d,value,std_error,trials,exhaustive\n");
        for m in &moments {
            let exact = spectra::moment_md_exhaustive(&f, cmd.p, m.d)?;
            let _ = writeln!(csv, "{},{},{},{},{}", m.d, m.value, m.std_error, m.trials, exact);
        }
        csv
    } else {
        spectra::moments_to_csv(&moments)
    };
    write_text(out, "moments.csv", &csv)?;
    for m in &moments {
        println!("m_{} = {:.6} ± {:.1e}", m.d, m.value, m.std_error);
    }
    Ok(())
}

#[derive(Serialize)]
struct OnlineSummary {
    mode: TrainMode,
    batches: usize,
    initial_coherence: f64,
    final_coherence: f64,
    initial_test_mse: f64,
    final_test_mse: f64,
}

pub fn train(cmd: &TrainCommand, seed: u64, out: &Path) -> Result<(), CliError> {
    let init = frames::make_gaussian_frame(cmd.m, cmd.n, seed)?;
    let mut model = LinearDae::new(init, cmd.decoder_iters, cmd.p, cmd.sigma_w)?;
    let cfg = cmd.train_config(seed);
    match cmd.mode {
        TrainMode::OnlineMse | TrainMode::OnlineCoherence => {
            let trace = dae::train_online(&mut model, &cfg, cmd.mode.objective())?;
            write_text(out, "trace.csv", &trace.to_csv())?;
            let curve = trace.test_curve();
            let (first, last) = (trace.first().expect("non-empty"), trace.last().expect("non-empty"));
            let summary = OnlineSummary {
                mode: cmd.mode,
                batches: cmd.steps,
                initial_coherence: first.coherence,
                final_coherence: last.coherence,
                initial_test_mse: curve[0].1,
                final_test_mse: curve[curve.len() - 1].1,
            };
            write_json(out, "summary.json", &summary)?;
            println!(
                "coherence {:.4} -> {:.4}, test mse {:.4} -> {:.4}",
                summary.initial_coherence, summary.final_coherence, summary.initial_test_mse, summary.final_test_mse
            );
        }
        TrainMode::Finite => {
            let (trace, summary) = dae::train_finite(&mut model, &cfg)?;
            write_text(out, "trace.csv", &trace.to_csv())?;
            write_json(out, "summary.json", &summary)?;
            println!(
                "min test mse {:.4}, final test mse {:.4}, final coherence {:.4}",
                summary.min_test_mse, summary.final_test_mse, summary.final_coherence
            );
        }
        TrainMode::Sweep => {
            let reference = frames::approximate_etf(cmd.m, cmd.n, cmd.etf_iters, seed)?;
            let result = dae::sweep_beta(&model, &cfg, &cmd.betas, &reference)?;
            write_text(out, "sweep.csv", &result.to_csv())?;
            write_json(out, "summary.json", &result)?;
            print!("{}", result.to_csv());
        }
    }
    Ok(())
}
