//! `frt`: response functions, PSD-weighted integrands and FRT infidelities.

use serde_json::json;

use rydex_atomic::Sr88;
use rydex_core::frt::{
    all_operators, default_grid, frt_infidelity, grid_up_to, response_spectrum, zero_frequency_audit,
    ResponseSpectrum, StateAverage,
};
use rydex_core::noise::{PsdKind, PsdTable};

use crate::cli::{Average, FrtArgs, FrtKind};
use crate::commands::Outcome;
use crate::error::{finite, CliError, Result};
use crate::files::{num, write_json, Table};
use crate::hardware::load_hardware;
use crate::psd_file::load_psd;
use crate::pulse_file::PulseFile;

fn kind_tag(k: PsdKind) -> &'static str {
    match k {
        PsdKind::Phase => "phase",
        PsdKind::Intensity => "intensity",
    }
}

/// `auto` or `fmax_hz:points`.
pub fn parse_grid(spec: &str) -> Result<Option<(f64, usize)>> {
    if spec == "auto" {
        return Ok(None);
    }
    let bad = || CliError::Usage(format!("--grid `{spec}`: expected `auto` or `fmax_hz:points`"));
    let (f, n) = spec.split_once(':').ok_or_else(bad)?;
    let f: f64 = f.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if !(f.is_finite() && f > 0.0) || n < 4 {
        return Err(bad());
    }
    Ok(Some((f, n)))
}

/// Integral of one operator's response against `psd`.
fn channel_integral(spectrum: &ResponseSpectrum, index: usize, psd: &PsdTable) -> f64 {
    let single = ResponseSpectrum {
        frequencies: spectrum.frequencies.clone(),
        responses: vec![spectrum.responses[index].clone()],
        state_average: spectrum.state_average.clone(),
    };
    frt_infidelity(&single, psd)
}

pub fn run(args: &FrtArgs) -> Result<Outcome> {
    if args.substeps == 0 {
        return Err(CliError::Usage("--substeps must be at least 1".into()));
    }
    let grid_spec = parse_grid(&args.grid)?;
    let file = PulseFile::load(&args.pulse)?;
    let atom = Sr88::from_env()?;
    let hw = load_hardware(&args.hardware, &atom)?;
    let setup = hw.setup(&file.pulse)?;
    let kinds: Vec<PsdKind> = match args.kind {
        FrtKind::Phase => vec![PsdKind::Phase],
        FrtKind::Intensity => vec![PsdKind::Intensity],
        FrtKind::Both => vec![PsdKind::Phase, PsdKind::Intensity],
    };
    let mut psds: Vec<PsdTable> = Vec::new();
    for p in &args.psd {
        let psd = load_psd(p)?;
        if psds.iter().any(|q| q.kind == psd.kind) {
            return Err(CliError::Usage(format!("two {} PSDs given", kind_tag(psd.kind))));
        }
        psds.push(psd);
    }
    for (k, hw_psd) in [(PsdKind::Phase, &hw.phase_psd), (PsdKind::Intensity, &hw.intensity_psd)] {
        if let Some(psd) = hw_psd {
            if !psds.iter().any(|q| q.kind == k) {
                psds.push(psd.clone());
            }
        }
    }
    psds.retain(|p| kinds.contains(&p.kind));

    let grid = match grid_spec {
        Some((f, n)) => grid_up_to(f, n),
        None => default_grid(&setup.pulse),
    };
    let average = match args.average {
        Average::Gate => StateAverage::GateAverage,
        Average::Basis => StateAverage::BasisAverage,
    };
    let operators = all_operators(&setup.pulse, &kinds);
    let spectrum = response_spectrum(&setup.system, &setup.pulse, &operators, &grid, &average, args.substeps)?;
    let audit = zero_frequency_audit(&setup.system, &setup.pulse, &average, args.substeps)?;

    let mut out = Outcome::default();
    let f_hi = *grid.last().expect("grid is non-empty");
    for psd in &psds {
        if !psd.covers(0.0, f_hi) {
            out.warn(format!(
                "{} PSD spans [{}, {}] Hz but the grid reaches {f_hi} Hz; interpolated inside, zero outside",
                kind_tag(psd.kind),
                psd.frequencies()[0],
                psd.max_frequency()
            ));
        }
    }

    let mut headers = vec!["frequency [Hz]".to_string()];
    for r in &spectrum.responses {
        let unit = match r.operator.kind {
            PsdKind::Phase => "1/rad^2",
            PsdKind::Intensity => "1",
        };
        headers.push(format!("I_{}_{} [{unit}]", kind_tag(r.operator.kind), r.operator.channel));
    }
    let psd_for = |k: PsdKind| psds.iter().find(|p| p.kind == k);
    for r in &spectrum.responses {
        if psd_for(r.operator.kind).is_some() {
            headers.push(format!("SI_{}_{} [1/Hz]", kind_tag(r.operator.kind), r.operator.channel));
        }
    }
    let mut table = Table::new(headers);
    for (i, &f) in grid.iter().enumerate() {
        let mut row = vec![num(f)];
        row.extend(spectrum.responses.iter().map(|r| num(r.values[i])));
        for r in &spectrum.responses {
            if let Some(psd) = psd_for(r.operator.kind) {
                row.push(num(psd.density(f) * r.values[i]));
            }
        }
        table.push(row);
    }
    let response_path = args.out_dir.join("response.csv");
    table.write(&response_path)?;

    let mut integrals = Vec::new();
    let mut total = 0.0;
    for (i, r) in spectrum.responses.iter().enumerate() {
        if let Some(psd) = psd_for(r.operator.kind) {
            let v = finite("FRT integral", channel_integral(&spectrum, i, psd))?;
            total += v;
            integrals.push(json!({ "kind": kind_tag(r.operator.kind), "channel": r.operator.channel, "infidelity": v }));
        }
    }
    let per_kind: Vec<_> = psds
        .iter()
        .map(|psd| json!({ "kind": kind_tag(psd.kind), "infidelity": frt_infidelity(&spectrum, psd) }))
        .collect();
    if psds.is_empty() {
        out.warn("no PSD available; only response functions were written");
    }
    let summary_path = args.out_dir.join("summary.json");
    let summary = json!({
        "hardware": hw.name,
        "average": args.average,
        "grid": { "points": grid.len(), "f_max_hz": f_hi },
        "zero_frequency": audit,
        "per_channel": integrals,
        "per_kind": per_kind,
        "total_infidelity": if psds.is_empty() { None } else { Some(total) },
        "warnings": out.warnings,
    });
    write_json(&summary_path, &summary)?;
    out.outputs = vec![response_path, summary_path];
    out.summary = summary;
    out.manifest = Some(args.out_dir.join("manifest.json"));
    Ok(out)
}
