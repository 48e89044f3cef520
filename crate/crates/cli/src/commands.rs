use std::path::{Path, PathBuf};

use msc_core::{
    dispatch_affinity, gen_arcs, minmax_normalize, msc_from_affinity, purity, segment, sweep,
    AffinityMode, AffinityOptions, AffinityOrigin, ArcSpec, DataMatrix, FeatureMode, ImageGrid,
    KernelFamily, KernelSpec, LabeledDataset, SamplingPlan, SegmentationConfig, SpectralConfig, SweepRow,
};

use crate::args::{
    AffinityArgs, ClusterArgs, FeatureName, GenArcsArgs, KernelArgs, KernelName, ModeName,
    SegmentArgs, SpectralArgs, SweepArgs, TableArgs,
};
use crate::error::{CliError, CliResult};
use crate::output::{format_number, write_atomic, Precision};
use crate::pnm;
use crate::table::{self, TableFormat};

pub fn parse_delimiter(s: &str) -> CliResult<u8> {
    match s {
        "tab" | "\\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(CliError::Input(format!("delimiter must be one ASCII character, got `{s}`"))),
    }
}

pub fn kernel_spec(args: &KernelArgs) -> CliResult<KernelSpec<f64>> {
    let spec = match args.kernel {
        KernelName::Jt => KernelSpec::jensen_tsallis(args.q, args.order),
        KernelName::Linear => KernelSpec::linear(args.order),
        KernelName::Gaussian => {
            if args.order != 2 {
                return Err(CliError::Input(format!(
                    "the gaussian baseline is a two-point kernel; got --n {}",
                    args.order
                )));
            }
            KernelSpec::gaussian(args.sigma)
        }
    };
    Ok(spec?)
}

pub fn affinity_options(args: &AffinityArgs, n_points: usize, order: usize) -> CliResult<AffinityOptions> {
    let mode = match args.mode {
        ModeName::Auto => AffinityMode::Auto,
        ModeName::Brute => AffinityMode::BruteForce,
        ModeName::Sampled => AffinityMode::Sampled,
        ModeName::ClosedForm => AffinityMode::ClosedForm,
        ModeName::KernelMatrix => AffinityMode::KernelMatrix,
    };
    if !(args.budget > 0.0) {
        return Err(CliError::Input("--budget must be positive".into()));
    }
    let plan = if mode == AffinityMode::Sampled {
        Some(if args.exhaustive {
            SamplingPlan::exhaustive(n_points, order)?
        } else {
            let c = args
                .columns
                .ok_or_else(|| CliError::Input("sampled mode needs --columns or --exhaustive".into()))?;
            SamplingPlan::uniform(c, 0)
        })
    } else {
        None
    };
    Ok(AffinityOptions {
        mode,
        plan,
        budget: args.budget,
    })
}

/// The sampling seed follows the clustering seed.
fn seeded(mut options: AffinityOptions, seed: u64) -> AffinityOptions {
    if let Some(plan) = options.plan.as_mut() {
        plan.seed = seed;
    }
    options
}

pub fn spectral_config(args: &SpectralArgs, m: usize) -> SpectralConfig {
    SpectralConfig {
        m,
        kmeans_restarts: args.restarts,
        kmeans_max_iters: args.max_iters,
        kmeans_tol: args.kmeans_tol,
        seed: args.seed,
        degree_floor: args.degree_floor,
    }
}

/// Loaded points in `[0,1]^d` plus compacted truth labels if present.
pub fn load_points(args: &TableArgs) -> CliResult<(DataMatrix<f64>, Option<Vec<usize>>)> {
    let format = TableFormat {
        delimiter: parse_delimiter(&args.delimiter)?,
        header: args.header,
        label_column: args.label_column,
    };
    let t = table::read_table(&args.input, &format)?;
    let points = if args.normalize {
        minmax_normalize(&t.points)
    } else {
        table::check_unit_range(&t.points)?;
        t.points
    };
    if points.nrows() < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least 2 data rows, found {}",
            args.input.display(),
            points.nrows()
        )));
    }
    let truth = t.labels.as_deref().map(table::compact_truth);
    Ok((DataMatrix::new(points)?, truth))
}

fn origin_name(origin: AffinityOrigin) -> &'static str {
    match origin {
        AffinityOrigin::BruteForce => "brute-force",
        AffinityOrigin::Sampled => "sampled",
        AffinityOrigin::ClosedForm => "closed-form",
        AffinityOrigin::KernelMatrix => "kernel-matrix",
        AffinityOrigin::Supplied => "supplied",
    }
}

fn format_list(values: &[f64], precision: Precision) -> String {
    values.iter().map(|&v| format_number(v, precision)).collect::<Vec<_>>().join(" ")
}

pub fn cmd_cluster(args: &ClusterArgs, precision: Precision) -> CliResult<()> {
    let spec = kernel_spec(&args.kernel)?;
    let (data, truth) = load_points(&args.table)?;
    let options = seeded(
        affinity_options(&args.affinity, data.n_points(), spec.order)?,
        args.spectral.seed,
    );
    let config = spectral_config(&args.spectral, args.clusters);
    config.validate(data.n_points())?;
    let v = dispatch_affinity(&data, &spec, &options)?;
    let assignment = msc_from_affinity(&v, &config)?;
    write_atomic(&args.output, table::format_labels(&assignment.labels).as_bytes())?;
    eprintln!(
        "clustered {} points into {} clusters with {} ({} affinity)",
        data.n_points(),
        config.m,
        spec.label(),
        origin_name(v.origin())
    );
    eprintln!("eigenvalues: {}", format_list(&assignment.eigenvalues, precision));
    eprintln!("distortion: {}", format_number(assignment.distortion, precision));
    if let Some(truth) = truth {
        let p = purity(&assignment.labels, &truth)?;
        eprintln!("purity: {}", format_number(p, precision));
    }
    Ok(())
}

fn ppm_path(args: &SegmentArgs) -> PathBuf {
    args.ppm.clone().unwrap_or_else(|| args.output.with_extension("ppm"))
}

pub fn cmd_segment(args: &SegmentArgs, precision: Precision) -> CliResult<()> {
    let spec = kernel_spec(&args.kernel)?;
    let bytes = std::fs::read(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let gray = pnm::read_pgm(&bytes).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", args.input.display())),
        other => other,
    })?;
    let image = ImageGrid::with_max_pixels(gray.width, gray.height, gray.pixels, args.max_pixels)?;
    let options = seeded(
        affinity_options(&args.affinity, image.len(), spec.order)?,
        args.spectral.seed,
    );
    let config = SegmentationConfig {
        lambda: args.lambda,
        radius: args.radius,
        m_initial: args.initial_clusters,
        target_segments: args.segments,
        feature_mode: match args.feature {
            FeatureName::Intensity => FeatureMode::Intensity,
            FeatureName::Texture16 => FeatureMode::Texture16,
        },
        kernel: spec,
        affinity: options,
        spectral: spectral_config(&args.spectral, args.initial_clusters),
    };
    let result = segment(&image, &config)?;
    let grid = table::format_label_grid(&result.labels, image.width(), b',');
    let ppm = pnm::write_ppm(image.width(), image.height(), &result.labels);
    let ppm_out = ppm_path(args);
    write_atomic(&args.output, grid.as_bytes())?;
    write_atomic(&ppm_out, &ppm)?;
    eprintln!(
        "segmented {}x{} image into {} segments after {} merges",
        image.width(),
        image.height(),
        config.target_segments,
        result.merges.len()
    );
    for step in &result.merges {
        eprintln!(
            "merged {} + {}: ncut {}",
            step.pair.0 + 1,
            step.pair.1 + 1,
            format_number(step.ncut, precision)
        );
    }
    Ok(())
}

pub fn cmd_gen_arcs(args: &GenArcsArgs, precision: Precision) -> CliResult<()> {
    let spec = ArcSpec {
        points_per_arc: args.points,
        radii: (args.inner_radius, args.outer_radius),
        radial_noise_sd: args.noise,
        seed: args.seed,
        ..ArcSpec::default()
    };
    let ds = gen_arcs(&spec)?;
    let text = table::format_rows(ds.data.as_array(), Some(&ds.truth), b',', precision);
    write_atomic(&args.output, text.as_bytes())
}

/// Values from `a,b,c` or an inclusive `start:stop:step` range.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Input(format!("cannot parse grid `{s}`"));
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((start, rest)) = s.split_once(':') {
        let (stop, step) = rest.split_once(':').ok_or_else(bad)?;
        let (start, stop, step): (f64, f64, f64) = (
            start.trim().parse().map_err(|_| bad())?,
            stop.trim().parse().map_err(|_| bad())?,
            step.trim().parse().map_err(|_| bad())?,
        );
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Ok(Vec::new());
        }
        return Ok((0..=count as usize).map(|k| start + k as f64 * step).collect());
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

fn parse_orders(s: &str) -> CliResult<Vec<usize>> {
    parse_grid(s)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CliError::Input(format!("kernel order {v} is not an integer")))
            }
        })
        .collect()
}

pub fn sweep_specs(args: &SweepArgs) -> CliResult<Vec<KernelSpec<f64>>> {
    let specs: Vec<KernelSpec<f64>> = match args.kernel {
        KernelName::Jt => {
            let qs = parse_grid(&args.q_grid)?;
            let mut specs = Vec::new();
            for n in parse_orders(&args.n_grid)? {
                for &q in &qs {
                    specs.push(KernelSpec::jensen_tsallis(q, n)?);
                }
            }
            specs
        }
        KernelName::Linear => parse_orders(&args.n_grid)?
            .into_iter()
            .map(KernelSpec::linear)
            .collect::<Result<_, _>>()?,
        KernelName::Gaussian => parse_grid(&args.sigma_grid)?
            .into_iter()
            .map(KernelSpec::gaussian)
            .collect::<Result<_, _>>()?,
    };
    if specs.is_empty() {
        return Err(CliError::Input("the parameter grid is empty".into()));
    }
    Ok(specs)
}

fn parameter(row: &SweepRow<f64>, precision: Precision) -> String {
    let spec = &row.spec;
    match spec.family {
        KernelFamily::JensenTsallis => format!("q={} n={}", format_number(spec.q, precision), spec.order),
        KernelFamily::MultipointLinear => format!("n={}", spec.order),
        KernelFamily::GaussianBaseline => format!("sigma={}", format_number(spec.sigma, precision)),
    }
}

pub fn format_sweep(rows: &[SweepRow<f64>], precision: Precision) -> String {
    let mut out = String::from("kernel,parameter,mean_purity,best_purity,wall_time\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.kernel_name(),
            parameter(row, precision),
            format_number(row.mean_purity, precision),
            format_number(row.best_purity, precision),
            format_number(row.wall_time, precision)
        ));
    }
    out
}

pub fn cmd_sweep(args: &SweepArgs, precision: Precision) -> CliResult<()> {
    if args.table.label_column.is_none() {
        return Err(CliError::Input("sweep needs --label-column for the ground truth".into()));
    }
    let specs = sweep_specs(args)?;
    let (data, truth) = load_points(&args.table)?;
    let dataset = LabeledDataset::new(data, truth.expect("label column given"))?;
    let m = args.clusters.unwrap_or_else(|| dataset.n_classes());
    let config = spectral_config(&args.spectral, m);
    let order = specs.iter().map(|s| s.order).max().unwrap_or(2);
    let options = seeded(
        affinity_options(&args.affinity, dataset.data.n_points(), order)?,
        args.spectral.seed,
    );
    let rows = if options.plan.is_some_and(|p| p.mode == msc_core::SamplingMode::Exhaustive) {
        // Exhaustive plans depend on the order, so build one per spec.
        let mut rows = Vec::new();
        for spec in &specs {
            let opts = seeded(affinity_options(&args.affinity, dataset.data.n_points(), spec.order)?, args.spectral.seed);
            rows.extend(sweep(&dataset, std::slice::from_ref(spec), &opts, &config, args.repeats)?);
        }
        rows
    } else {
        sweep(&dataset, &specs, &options, &config, args.repeats)?
    };
    let text = format_sweep(&rows, precision);
    match &args.output {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Reads a label file written by `cluster`.
pub fn read_label_file(path: &Path) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    table::parse_labels(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:2:0.25").unwrap().len(), 9);
        assert_eq!(parse_grid("0:2:0.25").unwrap()[8], 2.0);
        assert_eq!(parse_grid("2:12:2").unwrap(), vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0]);
        assert_eq!(parse_grid("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_orders("2.5").is_err());
    }

    #[test]
    fn delimiters() {
        assert_eq!(parse_delimiter(",").unwrap(), b',');
        assert_eq!(parse_delimiter("tab").unwrap(), b'\t');
        assert!(parse_delimiter(",,").is_err());
    }
}
