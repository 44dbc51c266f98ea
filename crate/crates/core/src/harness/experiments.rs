//! The experiment runners. Each returns unsorted rows; [`super::run`] puts
//! them in canonical order.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::ResultRow;
use super::threshold::{extract_crossing, extract_threshold};
use crate::chan_est::{Estimator, Init};
use crate::coding::{adjust_dispersion, llr_downlink, make_precoders, LdpcCode, UplinkDemapper};
use crate::detect::{detect_cauchy_ml, detect_gaussian_zf, SymbolAlphabet};
use crate::error::Result;
use crate::rates::{
    capacity_bound_power, capacity_lower_bound_sas, downlink_rate, mismatched_rate_cauchy_decoder,
    uplink_rate_imperfect_csi, uplink_rate_perfect_csi, DispersionMode, DownlinkCsi, ImperfectCsi,
    McBudget,
};
use crate::rng::{stream_id, substream, SimRng};
use crate::stable_noise::{NoiseKind, StableNoiseSpec};
use crate::system_model::{
    db_to_linear, linear_to_db, make_pilots, received_data_downlink, received_data_uplink,
    received_pilots, ChannelRealization, Direction, PilotKind, PowerProfile,
};
use crate::ComplexMatrix;

/// Sub-packets per coded packet; each goes into a different coherence block.
pub const INTERLEAVE_DEPTH: usize = 9;

/// Zero error counts are raised to this before taking logarithms.
const BER_FLOOR: f64 = 1e-7;

/// Offset of calibration block indices inside a grid point's streams.
const CALIBRATION_OFFSET: u64 = 1 << 28;

#[derive(Debug, Clone, Copy)]
enum Part {
    Channel = 0,
    Pilots = 1,
    Data = 2,
    Bits = 3,
}

fn block_rng(seed: u64, grid: usize, block: u64, part: Part) -> SimRng {
    substream(seed, stream_id(grid as u64, block * 4 + part as u64))
}

/// Seed for a Monte-Carlo budget owned by (grid point, method).
fn derived_seed(seed: u64, grid: usize, method: u64) -> u64 {
    substream(seed, stream_id(grid as u64, (1 << 30) | method)).random()
}

pub(crate) struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub hash: String,
    pub alphabet: SymbolAlphabet,
    pub noise: StableNoiseSpec,
}

impl Context<'_> {
    fn row(&self, sdr_db: f64, metric: &str, value: f64, std_error: f64, meta: String) -> ResultRow {
        ResultRow {
            experiment: self.config.experiment.name().into(),
            sdr_db,
            metric: metric.into(),
            value,
            std_error,
            meta,
            config_hash: self.hash.clone(),
        }
    }

    fn error_row(&self, sdr_db: f64, metric: &str, counts: Counts, meta: String) -> ResultRow {
        self.row(sdr_db, metric, counts.rate(), counts.std_error(), meta)
    }

    fn powers(&self, sdr_db: f64) -> Result<PowerProfile> {
        PowerProfile::swept_last(self.config.k, &self.config.fixed_powers_db, sdr_db, Direction::Uplink)
    }

    fn swept(&self) -> usize {
        self.config.k - 1
    }

    /// Draws the channel and pilot observation of one block and estimates it.
    fn estimate_block(
        &self,
        grid: usize,
        block: u64,
        powers: &PowerProfile,
        pilot_kind: PilotKind,
        estimators: &[Estimator],
    ) -> Result<(ChannelRealization, Vec<ComplexMatrix>)> {
        let c = self.config;
        let channel = ChannelRealization::draw(c.m, c.k, &mut block_rng(c.seed, grid, block, Part::Channel));
        let pilots = make_pilots(c.tau, c.k, pilot_kind)?;
        let y = received_pilots(
            &channel,
            &pilots,
            powers,
            Some(&self.noise),
            &mut block_rng(c.seed, grid, block, Part::Pilots),
        )?;
        let estimates = estimators
            .iter()
            .map(|e| e.estimate(&y, &pilots, powers, self.noise.gamma).map(|r| r.h_hat))
            .collect::<Result<Vec<_>>>()?;
        Ok((channel, estimates))
    }

    /// `gamma_tilde` for a likelihood dispersion `gamma`, from
    /// `calibration_blocks` extra blocks at the same SDR.
    fn calibration_errors(&self, grid: usize, powers: &PowerProfile) -> Result<Vec<Vec<Complex64>>> {
        let c = self.config;
        let estimator = c.chosen_estimator();
        let per_block = (0..c.calibration_blocks.max(1) as u64)
            .into_par_iter()
            .map(|b| {
                let (channel, est) =
                    self.estimate_block(grid, CALIBRATION_OFFSET + b, powers, c.pilot_kind, &[estimator])?;
                Ok((channel.h - &est[0])
                    .column_iter()
                    .map(|col| col.iter().copied().collect::<Vec<_>>())
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut errors = vec![Vec::new(); c.k];
        for block in per_block {
            for (acc, col) in errors.iter_mut().zip(block) {
                acc.extend(col);
            }
        }
        Ok(errors)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Counts {
    errors: u64,
    total: u64,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.errors += other.errors;
        self.total += other.total;
    }

    fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.errors as f64 / self.total as f64
        }
    }

    fn std_error(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let p = self.rate();
        (p * (1.0 - p) / self.total as f64).sqrt()
    }
}

fn sum_columns(per_unit: Vec<Vec<Counts>>, width: usize) -> Vec<Counts> {
    let mut totals = vec![Counts::default(); width];
    for unit in per_unit {
        for (t, c) in totals.iter_mut().zip(unit) {
            t.add(c);
        }
    }
    totals
}

fn random_indices(rng: &mut SimRng, alphabet: &SymbolAlphabet, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..alphabet.len())).collect()
}

fn points(alphabet: &SymbolAlphabet, indices: &[usize]) -> Vec<Complex64> {
    indices.iter().map(|&i| alphabet.point(i)).collect()
}

fn noise_label(noise: &StableNoiseSpec) -> String {
    if noise.alpha == 1.0 {
        "cauchy".into()
    } else if noise.alpha == 2.0 {
        "gaussian".into()
    } else {
        format!("sas{}", noise.alpha)
    }
}

pub(crate) fn run_experiment(ctx: &Context) -> Result<Vec<ResultRow>> {
    match ctx.config.experiment {
        ExperimentKind::SerVsSdr => ser_vs_sdr(ctx),
        ExperimentKind::DetectorRobustness => detector_robustness(ctx),
        ExperimentKind::UplinkRate => uplink_rate(ctx),
        ExperimentKind::DownlinkRate => downlink_rate_experiment(ctx),
        ExperimentKind::MismatchedRate => mismatched_rate(ctx),
        ExperimentKind::BerUplink => {
            let g = ctx.config.metric_gamma();
            let variants = [
                BerVariant::new("gamma=ignore", g, false),
                BerVariant::new("gamma=consider", g, true),
            ];
            uplink_ber(ctx, &variants)
        }
        ExperimentKind::DispersionMismatch => {
            let variants: Vec<BerVariant> = ctx
                .config
                .gamma_overrides
                .iter()
                .map(|&g| BerVariant::new(&format!("gamma_l={g}"), g, true))
                .collect();
            uplink_ber(ctx, &variants)
        }
        ExperimentKind::BerDownlink => downlink_ber(ctx),
    }
}

/// Uncoded SER of the swept user with the Cauchy ML detector for every
/// pilot book and estimator.
fn ser_vs_sdr(ctx: &Context) -> Result<Vec<ResultRow>> {
    let c = ctx.config;
    let estimators = [
        c.estimator_with(super::config::EstimatorKind::DespreadMl, Init::Zero),
        c.estimator_with(super::config::EstimatorKind::RawMl, Init::Despread),
        c.estimator_with(super::config::EstimatorKind::RawMl, Init::Zero),
    ];
    let kinds = [PilotKind::Dft, PilotKind::Identity];
    let gamma = c.metric_gamma();
    let mut rows = Vec::new();
    for (g, &sdr) in c.sdr_grid_db.iter().enumerate() {
        let powers = ctx.powers(sdr)?;
        let per_block = (0..c.n_blocks as u64)
            .into_par_iter()
            .map(|b| {
                let mut estimates = Vec::new();
                let mut channel = None;
                for kind in kinds {
                    let (ch, est) = ctx.estimate_block(g, b, &powers, kind, &estimators)?;
                    estimates.extend(est);
                    channel = Some(ch);
                }
                let channel = channel.expect("at least one pilot kind");
                let mut rng = block_rng(c.seed, g, b, Part::Data);
                let mut counts = vec![Counts::default(); estimates.len()];
                for _ in 0..c.symbols_per_block() {
                    let sent = random_indices(&mut rng, &ctx.alphabet, c.k);
                    let r = received_data_uplink(
                        &channel,
                        &powers,
                        &points(&ctx.alphabet, &sent),
                        Some(&ctx.noise),
                        &mut rng,
                    )?;
                    for (h_hat, count) in estimates.iter().zip(counts.iter_mut()) {
                        let det = detect_cauchy_ml(&r, h_hat, &powers.p, gamma, &ctx.alphabet, &c.detector)?;
                        count.total += 1;
                        count.errors += u64::from(det[ctx.swept()] != sent[ctx.swept()]);
                    }
                }
                Ok(counts)
            })
            .collect::<Result<Vec<_>>>()?;
        let totals = sum_columns(per_block, kinds.len() * estimators.len());
        for (i, kind) in kinds.iter().enumerate() {
            for (j, est) in estimators.iter().enumerate() {
                let meta = format!("pilot={};estimator={}", kind.name(), est.label());
                rows.push(ctx.error_row(sdr, "ser", totals[i * estimators.len() + j], meta));
            }
        }
    }
    Ok(rows)
}

/// SER of the Gaussian (ZF) and Cauchy detectors under Cauchy and Gaussian
/// data noise. The pilot phase always sees the configured noise.
fn detector_robustness(ctx: &Context) -> Result<Vec<ResultRow>> {
    let c = ctx.config;
    let gaussian = StableNoiseSpec::new(2.0, c.noise.gamma, NoiseKind::IsotropicComplex)?;
    let data_noises = [ctx.noise, gaussian];
    let gamma = c.metric_gamma();
    let estimator = c.chosen_estimator();
    let mut rows = Vec::new();
    for (g, &sdr) in c.sdr_grid_db.iter().enumerate() {
        let powers = ctx.powers(sdr)?;
        let per_block = (0..c.n_blocks as u64)
            .into_par_iter()
            .map(|b| {
                let (channel, est) = ctx.estimate_block(g, b, &powers, c.pilot_kind, &[estimator])?;
                let h_hat = &est[0];
                let mut counts = vec![Counts::default(); 4];
                for (n, noise) in data_noises.iter().enumerate() {
                    let mut rng = block_rng(c.seed, g, b, Part::Data);
                    for _ in 0..c.symbols_per_block() {
                        let sent = random_indices(&mut rng, &ctx.alphabet, c.k);
                        let r = received_data_uplink(
                            &channel,
                            &powers,
                            &points(&ctx.alphabet, &sent),
                            Some(noise),
                            &mut rng,
                        )?;
                        let zf = detect_gaussian_zf(&r, h_hat, &powers.p, &ctx.alphabet)?;
                        let ml = detect_cauchy_ml(&r, h_hat, &powers.p, gamma, &ctx.alphabet, &c.detector)?;
                        let k = ctx.swept();
                        for (d, det) in [zf, ml].iter().enumerate() {
                            counts[2 * n + d].total += 1;
                            counts[2 * n + d].errors += u64::from(det[k] != sent[k]);
                        }
                    }
                }
                Ok(counts)
            })
            .collect::<Result<Vec<_>>>()?;
        let totals = sum_columns(per_block, 4);
        for (n, noise) in data_noises.iter().enumerate() {
            for (d, detector) in ["gaussian_zf", "cauchy_ml"].iter().enumerate() {
                let meta = format!("noise={};detector={detector}", noise_label(noise));
                rows.push(ctx.error_row(sdr, "ser", totals[2 * n + d], meta));
            }
        }
    }
    Ok(rows)
}

fn imperfect_csi(ctx: &Context, mode: DispersionMode) -> Result<ImperfectCsi> {
    let c = ctx.config;
    let mut csi = ImperfectCsi::new(c.coherence()?, c.chosen_estimator());
    csi.pilot_kind = c.pilot_kind;
    csi.mode = mode;
    csi.symbols_per_block = c.symbols_per_block.unwrap_or(200);
    csi.calibration_blocks = c.calibration_blocks;
    Ok(csi)
}

/// Single-user uplink rate with perfect and estimated channels.
fn uplink_rate(ctx: &Context) -> Result<Vec<ResultRow>> {
    let c = ctx.config;
    let trials = c.rate_trials();
    let mut rows = Vec::new();
    for (g, &sdr) in c.sdr_grid_db.iter().enumerate() {
        let p = db_to_linear(sdr);
        let perfect = uplink_rate_perfect_csi(
            c.m,
            &ctx.alphabet,
            p,
            &ctx.noise,
            c.metric_gamma(),
            McBudget::new(trials, derived_seed(c.seed, g, 0)),
        )?;
        rows.push(ctx.row(sdr, "rate_bpcu", perfect.bpcu, perfect.std_error, "csi=perfect".into()));
        for (i, (mode, label)) in [(DispersionMode::Ignore, "ignore"), (DispersionMode::Consider, "consider")]
            .into_iter()
            .enumerate()
        {
            let csi = imperfect_csi(ctx, mode)?;
            let est = uplink_rate_imperfect_csi(
                c.m,
                &ctx.alphabet,
                p,
                &ctx.noise,
                &csi,
                McBudget::new(trials, derived_seed(c.seed, g, 1 + i as u64)),
            )?;
            rows.push(ctx.row(sdr, "rate_bpcu", est.bpcu, est.std_error, format!("csi=imperfect;gamma={label}")));
        }
    }
    Ok(rows)
}

/// Single-user downlink rate with a matched precoder.
fn downlink_rate_experiment(ctx: &Context) -> Result<Vec<ResultRow>> {
    let c = ctx.config;
    let trials = c.rate_trials();
    let mut rows = Vec::new();
    for (g, &sdr) in c.sdr_grid_db.iter().enumerate() {
        let p = db_to_linear(sdr);
        let cases = [
            ("csi=perfect", DownlinkCsi::Perfect),
            ("csi=imperfect", DownlinkCsi::Imperfect(imperfect_csi(ctx, DispersionMode::Ignore)?)),
        ];
        for (i, (label, csi)) in cases.iter().enumerate() {
            let est = downlink_rate(
                c.m,
                &ctx.alphabet,
                p,
                &ctx.noise,
                c.metric_gamma(),
                csi,
                McBudget::new(trials, derived_seed(c.seed, g, i as u64)),
            )?;
            rows.push(ctx.row(sdr, "rate_bpcu", est.bpcu, est.std_error, (*label).into()));
        }
    }
    Ok(rows)
}

/// Mismatched Cauchy-decoder rate against the SαS capacity bound, per
/// `alpha`, plus the SDR gap at `target_rate_bpcu`.
fn mismatched_rate(ctx: &Context) -> Result<Vec<ResultRow>> {
    let c = ctx.config;
    let gamma = c.noise.gamma;
    let mean_abs_re =
        ctx.alphabet.points().iter().map(|x| x.re.abs()).sum::<f64>() / ctx.alphabet.len() as f64;
    let mut rows = Vec::new();
    for (a, &alpha) in c.alphas.iter().enumerate() {
        let mut curve = Vec::new();
        for (g, &sdr) in c.sdr_grid_db.iter().enumerate() {
            let p = db_to_linear(sdr);
            let est = mismatched_rate_cauchy_decoder(
                alpha,
                gamma,
                &ctx.alphabet,
                p,
                McBudget::new(c.rate_trials(), derived_seed(c.seed, g, a as u64)),
            )?;
            curve.push((sdr, est.bpcu));
            rows.push(ctx.row(sdr, "rate_bpcu", est.bpcu, est.std_error, format!("alpha={alpha};curve=cauchy_decoder")));
            let bound = capacity_lower_bound_sas(alpha, gamma, p, mean_abs_re)?;
            rows.push(ctx.row(sdr, "rate_bpcu", bound, 0.0, format!("alpha={alpha};curve=capacity_bound")));
        }
        let bound_db = linear_to_db(capacity_bound_power(alpha, gamma, c.target_rate_bpcu, mean_abs_re)?);
        match extract_crossing(&curve, c.target_rate_bpcu) {
            Ok(crossing) => {
                rows.push(ctx.row(crossing, "gap_db", crossing - bound_db, 0.0, format!("alpha={alpha}")));
            }
            Err(_) => log::warn!(
                "alpha = {alpha}: mismatched rate does not cross {} bpcu on the grid",
                c.target_rate_bpcu
            ),
        }
    }
    Ok(rows)
}

/// One likelihood setting of the uplink BER experiments.
#[derive(Debug, Clone)]
struct BerVariant {
    meta: String,
    gamma: f64,
    adjust: bool,
}

impl BerVariant {
    fn new(meta: &str, gamma: f64, adjust: bool) -> Self {
        Self {
            meta: meta.into(),
            gamma,
            adjust,
        }
    }
}

/// Coded packets of the swept user for one interleaving group: info bits
/// and symbol indices per packet.
struct PacketGroup {
    info: Vec<Vec<u8>>,
    symbols: Vec<Vec<usize>>,
    sub_len: usize,
}

impl PacketGroup {
    fn draw(code: &LdpcCode, alphabet: &SymbolAlphabet, rng: &mut SimRng) -> Result<Self> {
        let mut info = Vec::with_capacity(INTERLEAVE_DEPTH);
        let mut symbols = Vec::with_capacity(INTERLEAVE_DEPTH);
        for _ in 0..INTERLEAVE_DEPTH {
            let bits: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
            symbols.push(alphabet.map_bits(&code.encode(&bits)?));
            info.push(bits);
        }
        let sub_len = symbols[0].len() / INTERLEAVE_DEPTH;
        Ok(Self { info, symbols, sub_len })
    }

    /// Packet and symbol position carried by data slot `slot` of block `i`.
    fn locate(&self, block: usize, slot: usize) -> (usize, usize) {
        (slot / self.sub_len, block * self.sub_len + slot % self.sub_len)
    }

    fn slots(&self) -> usize {
        self.sub_len * INTERLEAVE_DEPTH
    }

    fn bit_errors(&self, code: &LdpcCode, llrs: &[Vec<f64>], iterations: usize) -> Counts {
        let mut counts = Counts::default();
        for (packet, frame) in llrs.iter().enumerate() {
            let decoded = code.decode(frame, iterations);
            counts.total += self.info[packet].len() as u64;
            counts.errors += decoded
                .info_bits
                .iter()
                .zip(&self.info[packet])
                .filter(|(a, b)| a != b)
                .count() as u64;
        }
        counts
    }
}

fn groups(n_packets: usize) -> u64 {
    n_packets.div_ceil(INTERLEAVE_DEPTH) as u64
}

fn threshold_rows(ctx: &Context, rows: &[ResultRow], metas: &[String]) -> Vec<ResultRow> {
    let mut out = Vec::new();
    for meta in metas {
        let curve: Vec<(f64, f64)> =
            rows.iter().filter(|r| &r.meta == meta && r.metric == "ber").map(|r| (r.sdr_db, r.value)).collect();
        match extract_threshold(&curve, ctx.config.target_ber, BER_FLOOR) {
            Ok(t) => out.push(ctx.row(t, "threshold_db", t, 0.0, meta.clone())),
            Err(_) => log::warn!("{meta}: BER does not cross {} on the grid", ctx.config.target_ber),
        }
    }
    out
}

/// Coded uplink BER of the swept user for each likelihood variant.
fn uplink_ber(ctx: &Context, variants: &[BerVariant]) -> Result<Vec<ResultRow>> {
    let c = ctx.config;
    let code = LdpcCode::ieee80211n_648_r34();
    let estimator = c.chosen_estimator();
    let mut rows = Vec::new();
    for (g, &sdr) in c.sdr_grid_db.iter().enumerate() {
        let powers = ctx.powers(sdr)?;
        let gammas: Vec<f64> = if variants.iter().any(|v| v.adjust) {
            let errors = ctx.calibration_errors(g, &powers)?;
            variants
                .iter()
                .map(|v| if v.adjust { adjust_dispersion(&errors, &powers.p, v.gamma) } else { Ok(v.gamma) })
                .collect::<Result<_>>()?
        } else {
            variants.iter().map(|v| v.gamma).collect()
        };
        for (v, gt) in variants.iter().zip(&gammas) {
            log::info!("{sdr} dB, {}: likelihood dispersion {gt:.4}", v.meta);
        }
        let per_group = (0..groups(c.n_blocks))
            .into_par_iter()
            .map(|group| {
                let first = group * INTERLEAVE_DEPTH as u64;
                let packets = PacketGroup::draw(&code, &ctx.alphabet, &mut block_rng(c.seed, g, first, Part::Bits))?;
                let bits = ctx.alphabet.bits_per_symbol();
                let mut llrs = vec![vec![vec![0.0; code.n()]; INTERLEAVE_DEPTH]; variants.len()];
                for i in 0..INTERLEAVE_DEPTH {
                    let b = first + i as u64;
                    let (channel, est) = ctx.estimate_block(g, b, &powers, c.pilot_kind, &[estimator])?;
                    let h_hat = &est[0];
                    let mut rng = block_rng(c.seed, g, b, Part::Data);
                    for slot in 0..packets.slots() {
                        let (packet, pos) = packets.locate(i, slot);
                        let mut sent = random_indices(&mut rng, &ctx.alphabet, c.k);
                        sent[ctx.swept()] = packets.symbols[packet][pos];
                        let r = received_data_uplink(
                            &channel,
                            &powers,
                            &points(&ctx.alphabet, &sent),
                            Some(&ctx.noise),
                            &mut rng,
                        )?;
                        for (v, &gamma) in gammas.iter().enumerate() {
                            let demapper =
                                UplinkDemapper::new(&r, h_hat, &powers.p, gamma, &ctx.alphabet, c.detector)?;
                            let symbol_llrs = demapper.symbol_llrs(ctx.swept());
                            llrs[v][packet][pos * bits..(pos + 1) * bits].copy_from_slice(&symbol_llrs);
                        }
                    }
                }
                Ok(llrs.iter().map(|frames| packets.bit_errors(&code, frames, c.bp_iterations)).collect())
            })
            .collect::<Result<Vec<Vec<Counts>>>>()?;
        let totals = sum_columns(per_group, variants.len());
        for (v, counts) in variants.iter().zip(totals) {
            rows.push(ctx.error_row(sdr, "ber", counts, v.meta.clone()));
        }
    }
    let variant_metas: Vec<String> = variants.iter().map(|v| v.meta.clone()).collect();
    let thresholds = threshold_rows(ctx, &rows, &variant_metas);
    rows.extend(thresholds);
    Ok(rows)
}

/// Coded downlink BER of the swept user with MR and ZF precoding.
fn downlink_ber(ctx: &Context) -> Result<Vec<ResultRow>> {
    let c = ctx.config;
    let code = LdpcCode::ieee80211n_648_r34();
    let estimator = c.chosen_estimator();
    let gamma = c.metric_gamma();
    let labels = ["precoder=mr", "precoder=zf"];
    let k = ctx.swept();
    let mut rows = Vec::new();
    for (g, &sdr) in c.sdr_grid_db.iter().enumerate() {
        let powers = ctx.powers(sdr)?;
        let per_group = (0..groups(c.n_blocks))
            .into_par_iter()
            .map(|group| {
                let first = group * INTERLEAVE_DEPTH as u64;
                let packets = PacketGroup::draw(&code, &ctx.alphabet, &mut block_rng(c.seed, g, first, Part::Bits))?;
                let bits = ctx.alphabet.bits_per_symbol();
                let mut llrs = vec![vec![vec![0.0; code.n()]; INTERLEAVE_DEPTH]; labels.len()];
                for i in 0..INTERLEAVE_DEPTH {
                    let b = first + i as u64;
                    let (channel, est) = ctx.estimate_block(g, b, &powers, c.pilot_kind, &[estimator])?;
                    let pre = make_precoders(&est[0])?;
                    let precoders = [(&pre.mr, &pre.mr_gains), (&pre.zf, &pre.zf_gains)];
                    let mut rng = block_rng(c.seed, g, b, Part::Data);
                    for slot in 0..packets.slots() {
                        let (packet, pos) = packets.locate(i, slot);
                        let mut sent = random_indices(&mut rng, &ctx.alphabet, c.k);
                        sent[k] = packets.symbols[packet][pos];
                        let symbols = points(&ctx.alphabet, &sent);
                        let noise: Vec<Complex64> = (0..c.k).map(|_| ctx.noise.draw_complex(&mut rng)).collect();
                        for (v, (a, gains)) in precoders.iter().enumerate() {
                            let y = received_data_downlink(&channel, a, &powers, &symbols, None, &mut rng)?;
                            let y_k = y[k] + noise[k];
                            for bit in 0..bits {
                                llrs[v][packet][pos * bits + bit] =
                                    llr_downlink(y_k, gains[k], powers.p[k], gamma, &ctx.alphabet, bit);
                            }
                        }
                    }
                }
                Ok(llrs.iter().map(|frames| packets.bit_errors(&code, frames, c.bp_iterations)).collect())
            })
            .collect::<Result<Vec<Vec<Counts>>>>()?;
        let totals = sum_columns(per_group, labels.len());
        for (label, counts) in labels.iter().zip(totals) {
            rows.push(ctx.error_row(sdr, "ber", counts, (*label).into()));
        }
    }
    let metas: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    let thresholds = threshold_rows(ctx, &rows, &metas);
    rows.extend(thresholds);
    Ok(rows)
}
