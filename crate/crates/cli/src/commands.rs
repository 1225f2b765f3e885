//! One function per subcommand.

use std::f64::consts::PI;

use rainbow_core::continuum::{analytic_wavefunction, validity_map, wavefunction_overlap};
use rainbow_core::entanglement::{
    brute_force_block_entropy, correlation_matrix, entanglement_spectrum, entropy_scan, halfchain_spectrum,
    left_half_entropy_2d, left_half_entropy_2d_dense, renyi_entropies, BlockFamily, EntropyCurve,
};
use rainbow_core::fitting::{coefficients_table, fit_2d, renyi_coefficient_curves, Normalization2D};
use rainbow_core::io::{fmt_f64, write_bytes, Table};
use rainbow_core::lattice::{build_lattice_2d, site_label, CouplingProfile};
use rainbow_core::qubism::{render, schmidt_rank, slater_amplitudes};
use rainbow_core::sdrg::{rainbow_bonds, sdrg_run, sdrg_run_profile};
use rainbow_core::spectra::{diagonalize, fermi_velocity, occupied_orbitals, site_occupations, SolverPath, ZeroModePolicy};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{emit, usage, CliError, Output, Provenance};
use crate::{BlockArg, Cli, Command, Deformation, Format, NormalizationArg, PolicyArg};

type Res<T> = Result<T, CliError>;

pub fn run(cli: &Cli) -> Res<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| usage(format!("cannot size the worker pool: {e}")))?;
    }
    let prov = Provenance::new(cli);
    let mut failures = 0;
    let out = match &cli.command {
        Command::Spectrum { half_len, deformation, orbitals } => spectrum(&prov, *half_len, deformation, orbitals.as_deref())?,
        Command::Wavefunction { half_len, deformation, m } => wavefunction(*half_len, deformation, *m)?,
        Command::VelocityScan { half_len, z } => velocity_scan(*half_len, &z.values)?,
        Command::ValidityMap { half_lens, z, contours } => validity(&prov, &half_lens.values, &z.values, contours.as_deref())?,
        Command::EntropyScan { half_lens, deformation, n, block } => {
            let (kind, values) = match (&deformation.alpha, &deformation.h, &deformation.z) {
                (Some(a), _, _) => ("alpha", &a.values),
                (_, Some(h), _) => ("h", &h.values),
                (_, _, Some(z)) => ("z", &z.values),
                _ => unreachable!("clap enforces one deformation"),
            };
            entropy(&half_lens.values, kind, values, n, *block)?
        }
        Command::RenyiFit { half_lens, z, n } => renyi_fit(&half_lens.values, &z.values, n)?,
        Command::EsCollapse { half_lens, z, levels } => es_collapse(&half_lens.values, &z.values, *levels)?,
        Command::Sdrg { half_len, alpha, h, z, couplings, arcs } => {
            sdrg(&prov, *half_len, Deformation { alpha: *alpha, h: *h, z: *z }, couplings.as_deref(), arcs.as_deref())?
        }
        Command::Entropy2d { half_lens, alpha, n, policy, normalization, fit } => {
            entropy_2d(&half_lens.values, alpha, n, *policy, *normalization, *fit)?
        }
        Command::Qubism { sites, deformation } => qubism(*sites, deformation)?,
        Command::Validate => {
            let (out, failed) = validate()?;
            failures = failed;
            out
        }
    };
    emit(cli, &prov, out)?;
    if failures > 0 {
        return Err(CliError::Validation(failures));
    }
    Ok(())
}

fn check_orders(n: &[f64]) -> Res<()> {
    if n.is_empty() || n.iter().any(|x| !(x.is_finite() && *x >= 1.0)) {
        return Err(usage("Rényi orders must be ≥ 1"));
    }
    Ok(())
}

fn profile(half_len: usize, d: &Deformation) -> Res<CouplingProfile> {
    Ok(match (d.alpha, d.h, d.z) {
        (Some(a), None, None) => CouplingProfile::rainbow(half_len, a)?,
        (None, Some(h), None) => CouplingProfile::from_h(half_len, h)?,
        (None, None, Some(z)) => CouplingProfile::from_z(half_len, z)?,
        _ => return Err(usage("give exactly one of --alpha, --h, --z")),
    })
}

fn compact_profile(p: &CouplingProfile) -> String {
    format!("profile: {}", serde_json::to_string(p).expect("profiles serialize"))
}

fn spectrum(prov: &Provenance, half_len: usize, d: &Deformation, orbitals: Option<&std::path::Path>) -> Res<Output> {
    let p = profile(half_len, d)?;
    let spec = diagonalize(&p.hopping_matrix())?;
    if let Some(path) = orbitals {
        spec.write_orbitals(path)?;
    }
    let path = match spec.path {
        SolverPath::Bipartite => "bipartite",
        SolverPath::Dense => "dense",
    };
    let mut table = spec.energies_table().comment(compact_profile(&p)).comment(format!("solver: {path}, residual {:e}", spec.residual));
    if p.underflow_warning() {
        table = table.comment("warning: the weakest coupling is below 1e-280");
    }
    let json = json!({
        "profile": p,
        "solver": path,
        "residual": spec.residual,
        "energies": spec.energies,
    });
    let _ = prov;
    Ok(Output::table(table).with_json(json))
}

fn wavefunction(half_len: usize, d: &Deformation, m: i64) -> Res<Output> {
    let p = profile(half_len, d)?;
    let spec = diagonalize(&p.hopping_matrix())?;
    let mut exact = spec
        .level_orbital(m)
        .ok_or_else(|| usage(format!("level m = {m} is outside -{half_len}..{half_len}")))?;
    let cont = analytic_wavefunction(m, p.h, half_len);
    if exact.dot(&cont.components) < 0.0 {
        exact = -exact;
    }
    let overlap = wavefunction_overlap(&exact, &cont.components)?;
    let mut table = Table::new(&["site", "n", "exact", "continuum"])
        .comment(compact_profile(&p))
        .comment(format!("level m = {m}, energy {}, overlap {}", fmt_f64(spec.level(m).unwrap_or(f64::NAN)), fmt_f64(overlap)));
    for i in 0..2 * half_len {
        table.push(vec![
            i.to_string(),
            fmt_f64(site_label(i, half_len)),
            fmt_f64(exact[i]),
            fmt_f64(cont.components[i]),
        ]);
    }
    Ok(Output::table(table))
}

fn velocity_scan(half_len: usize, zs: &[f64]) -> Res<Output> {
    let rows = zs
        .par_iter()
        .map(|&z| {
            let p = CouplingProfile::from_z(half_len, z)?;
            fermi_velocity(&diagonalize(&p.hopping_matrix())?, half_len, z)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["z", "a_numeric", "a_multilevel", "a_analytic"]).comment(format!("L = {half_len}"));
    for r in &rows {
        table.push(vec![
            fmt_f64(r.z),
            fmt_f64(r.a_numeric),
            r.a_multilevel.map(fmt_f64).unwrap_or_else(|| "nan".into()),
            fmt_f64(r.a_analytic),
        ]);
    }
    Ok(Output::table(table).with_json(json!(rows)))
}

fn validity(prov: &Provenance, half_lens: &[usize], zs: &[f64], contours: Option<&std::path::Path>) -> Res<Output> {
    let map = validity_map(half_lens, zs)?;
    if let Some(path) = contours {
        prov.write_table(map.contour_table(), path)?;
    }
    let json = json!({ "points": map.points, "contours": map.contours });
    Ok(Output::table(map.grid_table()).with_json(json))
}

fn entropy(half_lens: &[usize], kind: &str, values: &[f64], n: &[f64], block: BlockArg) -> Res<Output> {
    check_orders(n)?;
    let profiles = half_lens
        .iter()
        .flat_map(|&l| values.iter().map(move |&v| (l, v)))
        .map(|(l, v)| {
            let d = match kind {
                "alpha" => Deformation { alpha: Some(v), h: None, z: None },
                "h" => Deformation { alpha: None, h: Some(v), z: None },
                _ => Deformation { alpha: None, h: None, z: Some(v) },
            };
            profile(l, &d)
        })
        .collect::<Res<Vec<_>>>()?;
    let family = match block {
        BlockArg::Half => BlockFamily::HalfChain,
        BlockArg::Boundary => BlockFamily::BoundaryScan,
    };
    let curves = profiles
        .par_iter()
        .map(|p| entropy_scan(p, family, n))
        .collect::<Result<Vec<_>, _>>()?;
    let curve = EntropyCurve {
        points: curves.into_iter().flat_map(|c| c.points).collect(),
    };
    let mut table = curve.table();
    if let [p] = profiles.as_slice() {
        table = table.comment(compact_profile(p));
    }
    Ok(Output::table(table))
}

fn renyi_fit(half_lens: &[usize], zs: &[f64], n: &[f64]) -> Res<Output> {
    check_orders(n)?;
    let mut sizes = half_lens.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 6 {
        return Err(usage("renyi-fit needs at least 6 distinct sizes"));
    }
    if sizes.iter().all(|l| l % 2 == 0) || sizes.iter().all(|l| l % 2 == 1) {
        return Err(usage("renyi-fit needs both even and odd L to resolve the (-1)^L term"));
    }
    let rows = renyi_coefficient_curves(&sizes, zs, n)?;
    let table = coefficients_table(&rows).comment("fits S = c (1/12)(1+1/n) ln(4L/pi) + d + f (-1)^L (8L/pi)^(-1/n); predictions anchored at z = 0");
    Ok(Output::table(table).with_json(json!(rows)))
}

fn es_collapse(half_lens: &[usize], zs: &[f64], levels: usize) -> Res<Output> {
    if let Some(l) = half_lens.iter().find(|l| *l % 2 == 1) {
        return Err(usage(format!("es-collapse labels levels by half-odd p and needs even L, got {l}")));
    }
    if zs.iter().any(|z| *z <= 0.0) {
        return Err(usage("es-collapse needs z > 0"));
    }
    let grid: Vec<(usize, f64)> = half_lens.iter().flat_map(|&l| zs.iter().map(move |&z| (l, z))).collect();
    let results = grid
        .par_iter()
        .map(|&(l, z)| {
            let p = CouplingProfile::from_z(l, z)?;
            halfchain_spectrum(&p).map(|(es, s)| (l, z, es, s))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["L", "z", "p", "eps", "eps_scaled", "delta_L", "S", "S_from_delta"])
        .comment("eps_scaled = eps z / (2 pi^2); S_from_delta = pi^2 / (3 delta_L)");
    for (l, z, es, s) in &results {
        let delta = es.delta_l.unwrap_or(f64::NAN);
        for (p, e) in es.central_levels(levels) {
            table.push(vec![
                l.to_string(),
                fmt_f64(*z),
                fmt_f64(p),
                fmt_f64(e),
                fmt_f64(e * z / (2.0 * PI * PI)),
                fmt_f64(delta),
                fmt_f64(*s),
                fmt_f64(PI * PI / (3.0 * delta)),
            ]);
        }
    }
    Ok(Output::table(table))
}

fn sdrg(prov: &Provenance, half_len: Option<usize>, d: Deformation, couplings: Option<&[f64]>, arcs: Option<&std::path::Path>) -> Res<Output> {
    let bonds = match (half_len, couplings) {
        (_, Some(c)) => sdrg_run(c)?,
        (Some(l), None) => sdrg_run_profile(&profile(l, &d)?)?,
        (None, None) => return Err(usage("give --L with a deformation, or --couplings")),
    };
    if let Some(path) = arcs {
        let mut text = String::new();
        for line in prov.lines() {
            text.push_str(&format!("# {line}\n"));
        }
        text.push_str(&bonds.arc_diagram());
        write_bytes(path, text.as_bytes())?;
    }
    let half = bonds.sites / 2;
    let mut table = Table::new(&["left", "right", "sign", "left_label", "right_label"]);
    for b in &bonds.bonds {
        table.push(vec![
            b.left.to_string(),
            b.right.to_string(),
            b.sign.to_string(),
            fmt_f64(site_label(b.left, half)),
            fmt_f64(site_label(b.right, half)),
        ]);
    }
    let json: Value = serde_json::from_str(&bonds.to_json()).expect("bond lists round-trip");
    let mut out = Output::table(table).with_json(json);
    out.default_format = Format::Json;
    Ok(out)
}

fn entropy_2d(half_lens: &[usize], alphas: &[f64], n: &[f64], policy: PolicyArg, norm: NormalizationArg, fit: bool) -> Res<Output> {
    check_orders(n)?;
    let policy = match policy {
        PolicyArg::Limit => ZeroModePolicy::LimitFromBelow,
        PolicyArg::Reject => ZeroModePolicy::Reject,
    };
    let norm = match norm {
        NormalizationArg::SideBits => Normalization2D::SideBits,
        NormalizationArg::HalfSideNats => Normalization2D::HalfSideNats,
    };
    let grid: Vec<(f64, usize)> = alphas.iter().flat_map(|&a| half_lens.iter().map(move |&l| (a, l))).collect();
    let values = grid
        .par_iter()
        .map(|&(a, l)| left_half_entropy_2d(&build_lattice_2d(l, a)?, n, policy))
        .collect::<Result<Vec<_>, _>>()?;
    if fit {
        let mut table = Table::new(&["alpha", "n", "A", "B", "C", "chi2"]);
        let mut fits = Vec::new();
        for &a in alphas {
            for (k, &order) in n.iter().enumerate() {
                let data: Vec<(usize, f64)> = grid
                    .iter()
                    .zip(&values)
                    .filter(|((b, _), _)| *b == a)
                    .map(|((_, l), s)| (*l, s[k]))
                    .collect();
                let f = fit_2d(&data, norm)?;
                table.push(vec![
                    fmt_f64(a),
                    fmt_f64(order),
                    fmt_f64(f.coefficients[0]),
                    fmt_f64(f.coefficients[1]),
                    fmt_f64(f.coefficients[2]),
                    fmt_f64(f.chi2),
                ]);
                let fj: Value = serde_json::from_str(&f.to_json()).expect("fits round-trip");
                fits.push(json!({ "alpha": a, "n": order, "fit": fj }));
            }
        }
        return Ok(Output::table(table).with_json(json!(fits)));
    }
    let mut table = Table::new(&["alpha", "L", "n", "S", "x", "s"]);
    for ((a, l), s) in grid.iter().zip(&values) {
        for (order, sv) in n.iter().zip(s) {
            let (x, y) = norm.apply(*l, *sv);
            table.push(vec![fmt_f64(*a), l.to_string(), fmt_f64(*order), fmt_f64(*sv), fmt_f64(x), fmt_f64(y)]);
        }
    }
    Ok(Output::table(table))
}

fn qubism(sites: usize, d: &Deformation) -> Res<Output> {
    if sites == 0 || sites % 2 == 1 {
        return Err(usage(format!("--sites must be a positive even number, got {sites}")));
    }
    let p = profile(sites / 2, d)?;
    let occ = occupied_orbitals(&diagonalize(&p.hopping_matrix())?)?;
    let amps = slater_amplitudes(&occ, sites)?;
    let image = render(&amps)?;
    let ranks = (1..sites).map(|l| schmidt_rank(&amps, l)).collect::<Result<Vec<_>, _>>()?;
    let json = json!({
        "sites": sites,
        "profile": p,
        "side": image.side,
        "lit_pixels": image.lit_pixels(),
        "nonzero_cells": image.nonzero_cells(),
        "schmidt_ranks": ranks,
    });
    Ok(Output {
        table: Some(amps.table().comment(compact_profile(&p))),
        json: Some(json),
        image: Some(image),
        default_format: Format::Ppm,
    })
}

fn validate() -> Res<(Output, usize)> {
    let mut table = Table::new(&["check", "status", "detail"]);
    let mut failures = 0;
    let mut record = |name: &str, ok: bool, detail: String| {
        if !ok {
            failures += 1;
        }
        table.push(vec![name.to_string(), if ok { "ok" } else { "FAILED" }.to_string(), detail.replace(',', ";")]);
    };
    let orders = [1.0, 2.0, 3.0, 4.0];
    let ground = |l: usize, a: f64| -> Res<_> { Ok(occupied_orbitals(&diagonalize(&CouplingProfile::rainbow(l, a)?.hopping_matrix())?)?) };

    let mut worst = 0.0f64;
    for n in [4, 6, 8] {
        for a in [0.01, 0.3, 1.0] {
            let occ = ground(n / 2, a)?;
            let amps = slater_amplitudes(&occ, n)?;
            for ell in 1..n {
                for block in [(0..ell).collect::<Vec<_>>(), (n - ell..n).collect()] {
                    let x = brute_force_block_entropy(&amps, &block, &orders)?;
                    let y = renyi_entropies(&correlation_matrix(&occ, &block)?, &orders)?;
                    worst = x.iter().zip(&y).fold(worst, |w, (p, q)| w.max((p - q).abs()));
                }
            }
        }
    }
    record("oracle_equivalence", worst <= 1e-10, format!("max deviation {worst:.2e}"));

    let mut worst = 0.0f64;
    for a in [0.1, 0.5, 1.0] {
        let occ = ground(6, a)?;
        for mask in [0b1u32, 0b101, 0b1110, 0b101011, 0b110011001100, 0b011111000001] {
            let block: Vec<usize> = (0..12).filter(|i| mask >> i & 1 == 1).collect();
            let rest: Vec<usize> = (0..12).filter(|i| mask >> i & 1 == 0).collect();
            let x = renyi_entropies(&correlation_matrix(&occ, &block)?, &orders)?;
            let y = renyi_entropies(&correlation_matrix(&occ, &rest)?, &orders)?;
            worst = x.iter().zip(&y).fold(worst, |w, (p, q)| w.max((p - q).abs()));
        }
    }
    record("complement_symmetry", worst <= 1e-8, format!("max deviation {worst:.2e}"));

    let dev = site_occupations(&ground(20, 0.3)?).iter().map(|n| (n - 0.5).abs()).fold(0.0, f64::max);
    record("half_filling_occupations", dev <= 1e-10, format!("max |n_i - 1/2| {dev:.2e}"));

    let occ = ground(15, 0.9)?;
    let c = correlation_matrix(&occ, &(0..15).collect::<Vec<_>>())?;
    let s = renyi_entropies(&c, &[1.0])?[0];
    let gap = (entanglement_spectrum(&c).entropy_from_levels() - s).abs();
    record("entropy_from_levels", gap <= 1e-10, format!("deviation {gap:.2e}"));

    let mut ok = true;
    for a in [0.01, 0.1, 0.2] {
        ok &= sdrg_run_profile(&CouplingProfile::rainbow(10, a)?)?.bonds == rainbow_bonds(10).bonds;
    }
    record("sdrg_rainbow_matching", ok, "L = 10; alpha in {0.01; 0.1; 0.2}".into());

    let mut worst = 0.0f64;
    for (l, a) in [(2, 0.5), (3, 0.8), (2, 0.95)] {
        let lat = build_lattice_2d(l, a)?;
        let x = left_half_entropy_2d(&lat, &[1.0, 2.0], ZeroModePolicy::Reject)?;
        let y = left_half_entropy_2d_dense(&lat, &[1.0, 2.0])?;
        worst = x.iter().zip(&y).fold(worst, |w, (p, q)| w.max((p - q).abs()));
    }
    record("sector_vs_dense_2d", worst <= 1e-9, format!("max deviation {worst:.2e}"));

    Ok((Output::table(table), failures))
}
