use memwall::roofline::{estimate_latency, normalized_latency};
use memwall::train_memory::ratio_to_f64;
use memwall::{
    decoder_generate_cost, encoder_forward_cost, ActivationModel, ArchClass, CostBreakdown,
    SeriesFilter, TransformerConfig, Workload,
};

use crate::error::{CliError, CliResult};
use crate::inputs;
use crate::report::{Cell, Digest256, Report};
use crate::{AnalyzeArgs, MemoryArgs, Mode, RooflineArgs, TrendsArgs, WorkloadArgs};

fn workload(args: &WorkloadArgs, seq: u64) -> CliResult<Workload> {
    Ok(Workload::new(seq)?
        .with_batch(args.batch)?
        .with_precision(args.precision)
        .with_elementwise(args.elementwise)
        .with_embeddings(args.embeddings))
}

fn mode_of(args: &WorkloadArgs, config: &TransformerConfig) -> ArchClass {
    match args.mode {
        Some(Mode::Encoder) => ArchClass::Encoder,
        Some(Mode::Decoder) => ArchClass::Decoder,
        None => config.arch_class(),
    }
}

fn run_cost(mode: ArchClass, config: &TransformerConfig, w: &Workload) -> CliResult<CostBreakdown> {
    let cost = match mode {
        ArchClass::Encoder => encoder_forward_cost(config, w)?,
        ArchClass::Decoder => decoder_generate_cost(config, w)?,
    };
    Ok(cost)
}

fn intensity(flops: u64, mops: u64) -> Cell {
    match memwall::ArithmeticIntensity::new(flops, mops) {
        Ok(ai) => Cell::Float(ai.value()),
        Err(_) => Cell::Empty,
    }
}

fn check_seq(seq: &[u64]) -> CliResult<()> {
    if seq.is_empty() || seq.contains(&0) {
        return Err(CliError::Invalid("--seq values must be at least 1".into()));
    }
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<Report> {
    check_seq(&args.workload.seq)?;
    let mut digest = Digest256::default();
    digest.update("command", b"analyze");
    digest.update("flags", format!("{:?} per_layer={}", args.workload, args.per_layer).as_bytes());
    let configs = args
        .models
        .iter()
        .map(|m| inputs::model(m, &mut digest))
        .collect::<CliResult<Vec<_>>>()?;

    let mut report = if args.per_layer {
        Report::new(
            "analyze",
            vec!["model", "mode", "seq_len", "layer", "kernel", "flops", "mops", "arithmetic_intensity"],
        )
    } else {
        Report::new(
            "analyze",
            vec![
                "model",
                "mode",
                "seq_len",
                "batch",
                "precision",
                "total_flops",
                "total_mops",
                "arithmetic_intensity",
            ],
        )
    };

    for config in &configs {
        let mode = mode_of(&args.workload, config);
        for &seq in &args.workload.seq {
            let w = workload(&args.workload, seq)?;
            let cost = run_cost(mode, config, &w)?;
            if args.per_layer {
                for k in cost.kernels() {
                    report.push(vec![
                        config.name().into(),
                        mode.to_string().into(),
                        seq.into(),
                        k.layer.map(Cell::Int).unwrap_or(Cell::Empty),
                        k.name.as_str().into(),
                        k.flops.into(),
                        k.mops.into(),
                        intensity(k.flops, k.mops),
                    ]);
                }
            } else {
                report.push(vec![
                    config.name().into(),
                    mode.to_string().into(),
                    seq.into(),
                    w.batch().into(),
                    w.precision().to_string().into(),
                    cost.total_flops().into(),
                    cost.total_mops().into(),
                    intensity(cost.total_flops(), cost.total_mops()),
                ]);
            }
        }
    }
    report.inputs_digest = digest.finish();
    Ok(report)
}

/// Rows are grouped by sequence length; within a group the first model is
/// the normalization baseline.
pub fn roofline(args: &RooflineArgs) -> CliResult<Report> {
    check_seq(&args.workload.seq)?;
    let mut digest = Digest256::default();
    digest.update("command", b"roofline");
    digest.update("flags", format!("{:?}", args.workload).as_bytes());
    let hw = inputs::hardware(&args.hardware, args.device.as_deref(), &mut digest)?;
    let configs = args
        .models
        .iter()
        .map(|m| inputs::model(m, &mut digest))
        .collect::<CliResult<Vec<_>>>()?;

    let mut report = Report::new(
        "roofline",
        vec![
            "model",
            "mode",
            "hardware",
            "seq_len",
            "total_flops",
            "total_mops",
            "arithmetic_intensity",
            "compute_time",
            "memory_time",
            "latency",
            "bound",
            "ridge_intensity",
            "normalized_latency",
        ],
    );
    for &seq in &args.workload.seq {
        let w = workload(&args.workload, seq)?;
        let mut rows = Vec::with_capacity(configs.len());
        for config in &configs {
            let mode = mode_of(&args.workload, config);
            let cost = run_cost(mode, config, &w)?;
            rows.push((config, mode, estimate_latency(&cost, &hw), cost));
        }
        let estimates: Vec<_> = rows.iter().map(|r| r.2).collect();
        let normalized = normalized_latency(&estimates, 0)?;
        for ((config, mode, est, cost), norm) in rows.into_iter().zip(normalized) {
            report.push(vec![
                config.name().into(),
                mode.to_string().into(),
                hw.name.as_str().into(),
                seq.into(),
                cost.total_flops().into(),
                cost.total_mops().into(),
                intensity(cost.total_flops(), cost.total_mops()),
                est.compute_time.into(),
                est.memory_time.into(),
                est.latency.into(),
                est.bound.to_string().into(),
                est.ridge_intensity.into(),
                norm.into(),
            ]);
        }
    }
    report.inputs_digest = digest.finish();
    Ok(report)
}

pub fn trends(args: &TrendsArgs) -> CliResult<Report> {
    let mut digest = Digest256::default();
    digest.update("command", b"trends");
    digest.update(
        "flags",
        format!("{} {:?} {:?} {:?}", args.metric, args.from, args.to, args.exclude_tag).as_bytes(),
    );
    let table = inputs::trend_table(args.csv.as_deref(), &mut digest)?;

    let mut filter = SeriesFilter::all().years(args.from, args.to);
    if args.metric != "all" {
        filter = filter.metric(args.metric.clone());
    }
    for tag in &args.exclude_tag {
        filter = filter.exclude_tag(tag.clone());
    }
    let series = table.series(&filter)?;
    let rates = memwall::headline_rates(&series)?;

    let mut report = Report::new(
        "trends",
        vec!["metric", "points", "rate_per_2yr", "r_squared", "factor_over_20yr", "status"],
    );
    for (s, rate) in series.iter().zip(rates) {
        let points = s.points().len() as u64;
        match rate.fit {
            Ok(fit) => report.push(vec![
                rate.metric_name.into(),
                points.into(),
                fit.rate_per_2yr.into(),
                fit.r_squared.into(),
                memwall::factor_over(&fit, 20.0).into(),
                "ok".into(),
            ]),
            Err(e) => {
                eprintln!("warning: {e}");
                report.push(vec![
                    rate.metric_name.into(),
                    points.into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    "degenerate".into(),
                ]);
            }
        }
    }
    report.inputs_digest = digest.finish();
    Ok(report)
}

pub fn memory(args: &MemoryArgs) -> CliResult<Report> {
    check_seq(&args.seq)?;
    let mut digest = Digest256::default();
    digest.update("command", b"memory");
    digest.update(
        "flags",
        format!(
            "{} {} {} {:?} {} {} {:?} {} {}",
            args.optimizer,
            args.param_bytes,
            args.state_bytes,
            args.checkpoint_every,
            args.checkpoint_sweep,
            args.retained_tensors,
            args.seq,
            args.batch,
            args.precision
        )
        .as_bytes(),
    );
    let config = inputs::model(&args.model, &mut digest)?;
    let model = ActivationModel::new(args.retained_tensors)?;

    let mut report = if args.checkpoint_sweep {
        Report::new(
            "memory",
            vec!["model", "seq_len", "batch", "every_k", "activation_bytes", "recompute_overhead", "total"],
        )
    } else {
        let mut columns = vec![
            "model",
            "optimizer",
            "seq_len",
            "batch",
            "weights",
            "gradients",
            "optimizer_state",
            "activations",
            "total",
        ];
        if args.checkpoint_every.is_some() {
            columns.extend(["every_k", "checkpointed_activations", "recompute_overhead", "checkpointed_total"]);
        }
        Report::new("memory", columns)
    };

    for &seq in &args.seq {
        let w = Workload::new(seq)?
            .with_batch(args.batch)?
            .with_precision(args.precision);
        let fp = model.footprint(&config, &w, args.optimizer, args.param_bytes, args.state_bytes)?;
        let static_bytes = fp.weights + fp.gradients + fp.optimizer_state;

        if args.checkpoint_sweep {
            for point in model.checkpoint_sweep(&config, &w)? {
                report.push(vec![
                    config.name().into(),
                    seq.into(),
                    w.batch().into(),
                    point.every_k.into(),
                    point.activation_bytes.into(),
                    ratio_to_f64(point.recompute_overhead).into(),
                    add(static_bytes, point.activation_bytes)?.into(),
                ]);
            }
            continue;
        }

        let mut row: Vec<Cell> = vec![
            config.name().into(),
            args.optimizer.to_string().into(),
            seq.into(),
            w.batch().into(),
            fp.weights.into(),
            fp.gradients.into(),
            fp.optimizer_state.into(),
            fp.activations.into(),
            fp.total.into(),
        ];
        if let Some(k) = args.checkpoint_every {
            let bytes = model.checkpointed_bytes(&config, &w, k)?;
            let overhead = memwall::recompute_overhead(&config, k)?;
            row.extend([
                k.into(),
                bytes.into(),
                ratio_to_f64(overhead).into(),
                add(static_bytes, bytes)?.into(),
            ]);
        }
        report.push(row);
    }
    report.inputs_digest = digest.finish();
    Ok(report)
}

fn add(a: u64, b: u64) -> CliResult<u64> {
    a.checked_add(b)
        .ok_or_else(|| CliError::Overflow("arithmetic overflow while totaling memory".into()))
}
