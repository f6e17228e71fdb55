use std::path::{Path, PathBuf};
use std::sync::Arc;

use bodymap_core::analysis::{attribute_report, write_reports, GroupBy};
use bodymap_core::baseline::{Baseline, BaselineClass};
use bodymap_core::dataset::{
    check_id, export_dataset, render_seed, split_dataset, write_jsonl, DatasetManifest, ManifestHeader, Split,
    MANIFEST_FILE, REJECTS_FILE,
};
use bodymap_core::llm::{LlmClient, MockBackend};
use bodymap_core::par::map_slice;
use bodymap_core::pipeline::{validate_documentation, DiagnosisPlan, Generator, PlanMode};
use bodymap_core::prompt::PromptSet;
use bodymap_core::render::{rasterize_png, SvgRenderer};
use bodymap_core::{BreedKnowledgeBase, DiagnosisSpec, Documentation, RegionAtlas};

use crate::config::{BackendFlags, RunConfig};
use crate::error::CliError;
use crate::{
    AnalyzeArgs, BaselineArgs, ClassArg, Cli, Command, ExportArgs, GenerateArgs, PlanArg, RenderArgs, ValidateArgs,
};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let env = |k: &str| std::env::var(k).ok();
    let flags = cli.global.flags();
    match &cli.command {
        Command::Generate(args) => {
            generate(args, RunConfig::resolve(&flags, args.seed.seed, &args.backend.flags(), env)?)
        }
        Command::Baseline(args) => baseline(args, RunConfig::resolve(&flags, args.seed.seed, &BackendFlags::default(), env)?),
        Command::Render(args) => render(args, RunConfig::resolve(&flags, args.seed.seed, &BackendFlags::default(), env)?),
        Command::Analyze(args) => analyze(args, RunConfig::resolve(&flags, None, &BackendFlags::default(), env)?),
        Command::Export(args) => export(args, RunConfig::resolve(&flags, args.seed.seed, &BackendFlags::default(), env)?),
        Command::Validate(args) => validate(args, RunConfig::resolve(&flags, None, &BackendFlags::default(), env)?),
    }
}

fn load_atlas(rc: &RunConfig) -> Result<RegionAtlas, CliError> {
    RunConfig::require_path(&rc.atlas, "atlas")?;
    Ok(RegionAtlas::load(&rc.atlas)?)
}

fn load_kb(rc: &RunConfig) -> Result<BreedKnowledgeBase, CliError> {
    RunConfig::require_path(&rc.kb, "knowledge base")?;
    Ok(BreedKnowledgeBase::load(&rc.kb)?)
}

fn load_prompts(rc: &RunConfig) -> Result<PromptSet, CliError> {
    RunConfig::require_path(&rc.prompts, "prompt directory")?;
    Ok(PromptSet::load(&rc.prompts)?)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))
}

fn read_manifests(paths: &[PathBuf], atlas: &RegionAtlas) -> Result<DatasetManifest, CliError> {
    let mut manifests = Vec::with_capacity(paths.len());
    for path in paths {
        let m = DatasetManifest::read(path)?;
        if m.atlas_mismatch(atlas) {
            log::warn!("{} was written with a different atlas (sha256 {})", path.display(), m.header.atlas_sha256);
        }
        manifests.push(m);
    }
    Ok(DatasetManifest::merge(manifests)?)
}

fn plan_line(item: &str, value: impl std::fmt::Display) {
    println!("plan: {item}: {value}");
}

fn generate(args: &GenerateArgs, rc: RunConfig) -> Result<(), CliError> {
    let seed = rc.require_seed()?;
    if args.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    let plan = match &args.diagnosis_pool {
        Some(pool) => {
            RunConfig::require_path(pool, "diagnosis pool")?;
            let mode = match args.plan {
                PlanArg::Uniform => PlanMode::Uniform,
                PlanArg::RoundRobin => PlanMode::RoundRobin,
            };
            DiagnosisPlan::load_pool(pool, mode)?
        }
        None => {
            let mut spec = DiagnosisSpec { name: args.diagnosis.clone(), grade: args.grade, location: args.location };
            if spec.is_patellar_luxation() {
                spec = DiagnosisSpec::patellar(args.grade, args.location);
            }
            spec.check().map_err(CliError::usage)?;
            DiagnosisPlan::single(spec)?
        }
    };
    if let Some(mock) = &args.mock {
        RunConfig::require_path(mock, "mock fixture")?;
    }
    rc.backend.check()?;
    let atlas = load_atlas(&rc)?;
    let kb = load_kb(&rc)?;
    let prompts = load_prompts(&rc)?;

    if rc.dry_run {
        plan_line("count", args.count);
        plan_line("seed", seed);
        plan_line("diagnoses", plan.pool().len());
        match &args.mock {
            Some(m) => plan_line("backend", format!("mock {}", m.display())),
            None => plan_line("backend", format!("{} model {}", rc.backend.base_url, rc.backend.model)),
        }
        plan_line("sampling", format!("temperature {} top_p {}", rc.backend.temperature, rc.backend.top_p));
        plan_line("write", args.out.join(MANIFEST_FILE).display());
        plan_line("write", args.out.join(REJECTS_FILE).display());
        return Ok(());
    }

    let client = match &args.mock {
        Some(m) => LlmClient::new(rc.backend.clone(), Arc::new(MockBackend::load(m)?))?,
        None => LlmClient::http(rc.backend.clone())?,
    };
    let mut generator = Generator::new(&client, &atlas, &kb, &prompts);
    generator.explicit_reasoning = !args.no_reasoning;
    generator.id_prefix = args.id_prefix.clone();
    let batch = generator.generate_batch(&plan, args.count, seed, rc.parallelism())?;

    create_dir(&args.out)?;
    let manifest = DatasetManifest::from_documentations(ManifestHeader::new(&atlas, seed), batch.docs)?;
    manifest.write(args.out.join(MANIFEST_FILE))?;
    write_jsonl(args.out.join(REJECTS_FILE), &batch.rejects)?;
    println!(
        "generated {} documentations ({} rejected, {} duplicate findings dropped) in {}",
        manifest.entries.len(),
        batch.rejects.len(),
        batch.duplicates_dropped,
        args.out.display()
    );
    if manifest.entries.is_empty() {
        return Err(CliError::new("pipeline", format!("all {} items were rejected; see {}", args.count, REJECTS_FILE)));
    }
    Ok(())
}

fn baseline(args: &BaselineArgs, rc: RunConfig) -> Result<(), CliError> {
    let seed = rc.require_seed()?;
    if args.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    let atlas = load_atlas(&rc)?;
    let kb = if args.no_metadata { None } else { Some(load_kb(&rc)?) };
    let (class, default_prefix) = match args.class {
        ClassArg::Patellar => (BaselineClass::Patellar, "rb-patellar-"),
        ClassArg::Other => (BaselineClass::Other, "rb-other-"),
    };
    let prefix = args.id_prefix.as_deref().unwrap_or(default_prefix);
    if rc.dry_run {
        plan_line("class", format!("{class:?}").to_lowercase());
        plan_line("count", args.count);
        plan_line("seed", seed);
        plan_line("write", args.out.join(MANIFEST_FILE).display());
        return Ok(());
    }
    let docs = Baseline::new(&atlas)?.batch(class, args.count, seed, prefix, kb.as_ref(), rc.parallelism())?;
    create_dir(&args.out)?;
    let manifest = DatasetManifest::from_documentations(ManifestHeader::new(&atlas, seed), docs)?;
    manifest.write(args.out.join(MANIFEST_FILE))?;
    println!("wrote {} documentations to {}", manifest.entries.len(), args.out.join(MANIFEST_FILE).display());
    Ok(())
}

fn render(args: &RenderArgs, rc: RunConfig) -> Result<(), CliError> {
    let seed = rc.require_seed()?;
    let atlas = load_atlas(&rc)?;
    let manifest = read_manifests(std::slice::from_ref(&args.manifest), &atlas)?;
    for e in &manifest.entries {
        check_id(&e.doc.id)?;
    }
    if rc.dry_run {
        plan_line("documentations", manifest.entries.len());
        plan_line("seed", seed);
        plan_line("write", format!("{}/<id>.svg{}", args.out.display(), if args.png { " and <id>.png" } else { "" }));
        return Ok(());
    }
    create_dir(&args.out)?;
    let renderer = SvgRenderer::new(&atlas)?;
    let results = map_slice(&manifest.entries, rc.parallelism(), |entry| -> Result<(), CliError> {
        let doc = &entry.doc;
        let svg = renderer.render(doc, render_seed(seed, doc))?;
        let path = args.out.join(format!("{}.svg", doc.id));
        std::fs::write(&path, &svg).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        if args.png {
            let path = args.out.join(format!("{}.png", doc.id));
            std::fs::write(&path, rasterize_png(&svg)?).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    });
    results.into_iter().collect::<Result<Vec<()>, _>>()?;
    println!("rendered {} documentations to {}", manifest.entries.len(), args.out.display());
    Ok(())
}

fn analyze(args: &AnalyzeArgs, rc: RunConfig) -> Result<(), CliError> {
    let by: GroupBy = args.by.parse()?;
    let atlas = load_atlas(&rc)?;
    let manifest = read_manifests(&args.manifest, &atlas)?;
    let kb = if by == GroupBy::Weight { Some(load_kb(&rc)?) } else { None };
    let docs: Vec<Documentation> = manifest.entries.into_iter().map(|e| e.doc).collect();
    let reports = attribute_report(&docs, &atlas, by, kb.as_ref(), rc.parallelism())?;
    if rc.dry_run {
        plan_line("documentations", docs.len());
        for r in &reports {
            plan_line("group", format!("{} ({} documentations)", r.key.name, r.documents));
        }
        plan_line("write", args.out.join("summary.csv").display());
        return Ok(());
    }
    let written = write_reports(&reports, &SvgRenderer::new(&atlas)?, &args.out)?;
    println!("analyzed {} documentations in {} group(s); wrote {} files to {}", docs.len(), reports.len(), written.len(), args.out.display());
    Ok(())
}

fn export(args: &ExportArgs, rc: RunConfig) -> Result<(), CliError> {
    let seed = rc.require_seed()?;
    let atlas = load_atlas(&rc)?;
    let mut manifest = read_manifests(&args.manifest, &atlas)?;
    manifest.header = ManifestHeader::new(&atlas, seed);
    // A previously exported manifest keeps its split.
    let presplit = !manifest.entries.is_empty() && manifest.entries.iter().all(|e| e.split != Split::Unassigned);
    if !presplit {
        manifest = split_dataset(manifest, args.train_frac, seed)?;
    }
    if rc.dry_run {
        for ((label, split), n) in manifest.split_counts() {
            plan_line(&format!("{split}/{label}"), n);
        }
        plan_line("write", args.out.display());
        return Ok(());
    }
    create_dir(&args.out)?;
    let report = export_dataset(&manifest, &atlas, &args.out, seed, rc.parallelism())?;
    for r in &report.rejects {
        log::warn!("{}: {}", r.id, r.error);
    }
    println!("exported {} images ({} rejected) to {}", report.images, report.rejects.len(), args.out.display());
    Ok(())
}

fn validate(args: &ValidateArgs, rc: RunConfig) -> Result<(), CliError> {
    let atlas = load_atlas(&rc)?;
    println!(
        "atlas ok: {} regions, {} conditions, sha256 {}",
        atlas.regions().len(),
        atlas.conditions().len(),
        atlas.sha256()
    );
    let kb = load_kb(&rc)?;
    println!("knowledge base ok: {} breeds", kb.len());
    let prompts = load_prompts(&rc)?;
    println!("prompts ok: {} examples", prompts.few_shot.len());
    if let Some(mock) = &args.mock {
        MockBackend::load(mock)?;
        println!("mock fixture ok: {}", mock.display());
    }
    let mut problems = 0usize;
    for path in &args.manifest {
        let manifest = read_manifests(std::slice::from_ref(path), &atlas)?;
        let mut duplicates = 0;
        for e in &manifest.entries {
            match validate_documentation(e.doc.clone(), &atlas) {
                Ok(v) => duplicates += v.duplicates_dropped,
                Err(err) => {
                    problems += 1;
                    eprintln!("{}: {}: {err}", path.display(), e.doc.id);
                }
            }
            if let Some(meta) = &e.doc.metadata {
                if let Err(err) = kb.check(meta) {
                    problems += 1;
                    eprintln!("{}: {}: {err}", path.display(), e.doc.id);
                }
            }
        }
        if duplicates > 0 {
            problems += 1;
            eprintln!("{}: {duplicates} finding(s) on an already marked region", path.display());
        }
        println!("manifest {}: {} entries", path.display(), manifest.entries.len());
    }
    if problems > 0 {
        return Err(CliError::new("validation", format!("{problems} problem(s) found")));
    }
    Ok(())
}
