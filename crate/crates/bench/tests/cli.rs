use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser};
use hetgp_bench::campaign::{read_raw_csv, read_run, run_file_name};
use hetgp_bench::cli::{
    cmd_campaign, cmd_generate, cmd_plan, cmd_plot_prior, Cli, Command, GenerateArgs, PlanArgs, PlotPriorArgs,
};
use hetgp_bench::config::{CampaignConfig, CorpusKind, Overrides, Profile};
use hetgp_bench::corpus::{load_corpus, load_problem, write_problem, Meta, Origin, Problem};
use hetgp_core::environment::{build_sdf, OccupancyGrid};
use hetgp_core::maze_gen::solvable_path_exists;
use sha2::{Digest, Sha256};

fn hash_tree(dir: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let digest = Sha256::digest(fs::read(&p).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), hex);
            }
        }
    }
    out
}

fn generate(n: usize, count: usize, seed: u64, out: &Path) -> usize {
    cmd_generate(&GenerateArgs {
        n,
        count,
        seed,
        out: out.to_path_buf(),
        kind: CorpusKind::Maze,
        config: None,
    })
    .unwrap()
}

fn open_fixture(dir: &Path) -> PathBuf {
    let mut g = OccupancyGrid::new(61, 61, 0.1, [0.0, 0.0]).unwrap();
    g.fill_box([0.0, 0.0], [6.0, 0.1]);
    g.fill_box([0.0, 5.9], [6.0, 6.0]);
    g.fill_box([0.0, 0.0], [0.1, 6.0]);
    g.fill_box([5.9, 0.0], [6.0, 6.0]);
    let problem = Problem {
        meta: Meta {
            id: "open_1x1".into(),
            seed: 0,
            n: 1,
            start: [1.5, 1.5],
            goal: [4.5, 4.5],
            origin: Origin::Fixture,
        },
        occupancy: g,
    };
    write_problem(&problem, dir).unwrap()
}

fn plan_args(problem: PathBuf, result: PathBuf) -> PlanArgs {
    PlanArgs {
        problem,
        config: None,
        overrides: Overrides::default(),
        result,
        plot: None,
        elites: false,
    }
}

#[test]
fn cli_definition_is_consistent() {
    Cli::command().debug_assert();
    let cli = Cli::try_parse_from([
        "hetgp",
        "campaign",
        "--sizes",
        "3,4",
        "--arms",
        "heteroscedastic,constant:2",
    ])
    .unwrap();
    let Command::Campaign(a) = cli.command else {
        panic!("parsed the wrong subcommand");
    };
    assert_eq!(a.overrides.sizes, Some(vec![3, 4]));
    assert_eq!(
        a.overrides.arms,
        Some(vec![Profile::Heteroscedastic, Profile::Constant(2.0)])
    );
}

#[test]
fn generate_is_deterministic_and_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(generate(3, 10, 42, &a), 10);
    let first = hash_tree(&a);
    generate(3, 10, 42, &a);
    assert_eq!(hash_tree(&a), first);
    generate(3, 10, 42, &b);
    assert_eq!(hash_tree(&b), first);
    let subs: Vec<_> = fs::read_dir(&a).unwrap().collect();
    assert_eq!(subs.len(), 10);
    assert!(a.join("maze_0001/occupancy.pgm").is_file());
    assert!(a.join("maze_0010/meta.json").is_file());
    let problems = load_corpus(&a).unwrap();
    assert_eq!(problems[3].meta.seed, 45);
}

#[test]
fn generated_5x5_maze_is_solvable() {
    let dir = tempfile::tempdir().unwrap();
    generate(5, 1, 1234, dir.path());
    let p = load_problem(&dir.path().join("maze_0001")).unwrap();
    let sdf = build_sdf(&p.occupancy);
    assert!(solvable_path_exists(&sdf, p.meta.start, p.meta.goal, 0.5));
}

#[test]
fn corrupt_corpus_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    generate(3, 1, 0, dir.path());
    let pgm = dir.path().join("maze_0001/occupancy.pgm");
    fs::write(&pgm, b"P5\n3 3\n255\n").unwrap();
    let err = format!("{:#}", load_corpus(dir.path()).unwrap_err());
    assert!(err.contains("occupancy.pgm"), "{err}");
    let meta = dir.path().join("maze_0001/meta.json");
    fs::write(&meta, "{").unwrap();
    let err = format!("{:#}", load_problem(&dir.path().join("maze_0001")).unwrap_err());
    assert!(err.contains("meta.json"), "{err}");
}

#[test]
fn open_fixture_plans_at_zero_cost_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let problem = open_fixture(dir.path());
    let mut args = plan_args(problem, dir.path().join("r.json"));
    args.plot = Some(dir.path().join("r.svg"));
    args.elites = true;
    let run = cmd_plan(&args).unwrap();
    assert!(run.detail.record.solved);
    assert_eq!(run.detail.record.best_cost, Some(0.0));
    assert_eq!(run.detail.dense.len(), 4 * (10 * 5 + 1));
    let stored = read_run(&args.result).unwrap();
    assert_eq!(stored, run.detail);
    let svg = fs::read_to_string(dir.path().join("r.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert!(doc.descendants().any(|n| n.has_tag_name("polyline")));
}

#[test]
fn deterministic_plan_repeats_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    generate(4, 1, 8, &dir.path().join("c"));
    let problem = dir.path().join("c/maze_0001");
    let mut bytes = Vec::new();
    for k in 0..2 {
        let mut args = plan_args(problem.clone(), dir.path().join(format!("r{k}.json")));
        args.overrides.deterministic = Some(true);
        args.overrides.max_iters = Some(10);
        args.overrides.k_samples = Some(100);
        args.overrides.seed = Some(5);
        cmd_plan(&args).unwrap();
        bytes.push(fs::read(&args.result).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn campaign_reports_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CampaignConfig {
        sizes: vec![3, 4],
        count: 3,
        arms: vec![Profile::Heteroscedastic, Profile::Homoscedastic],
        t_max_ms: 400,
        output: dir.path().join("out"),
        ..Default::default()
    };
    let report = cmd_campaign(&cfg).unwrap();
    assert_eq!(report.rows.len(), 4);
    let raw = read_raw_csv(&cfg.output.join("raw.csv")).unwrap();
    assert_eq!(raw.len(), 12);
    assert_eq!(raw, report.records().cloned().collect::<Vec<_>>());

    let summary = fs::read_to_string(cfg.output.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("arm,maze_size,k,t_max_ms,success_rate_pct,mean_ms,median_ms,n")
    );
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let group: Vec<_> = raw.iter().filter(|r| r.arm == f[0] && r.maze_size == f[1]).collect();
        let solved = group.iter().filter(|r| r.solved).count();
        assert_eq!(f[7], group.len().to_string());
        assert_eq!(f[4], format!("{:.1}", 100.0 * solved as f64 / group.len() as f64));
        assert_eq!(f[3], "400");
    }

    let problems = hetgp_bench::corpus::campaign_problems(&cfg).unwrap();
    for r in raw.iter().filter(|r| r.solved) {
        let detail = read_run(&cfg.output.join("runs").join(run_file_name(r))).unwrap();
        let p = problems.iter().find(|p| p.meta.id == r.problem).unwrap();
        assert!(detail.is_collision_free(&build_sdf(&p.occupancy)), "{}", r.problem);
    }
}

#[test]
fn empty_corpus_fails_before_planning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CampaignConfig {
        corpus: Some(dir.path().to_path_buf()),
        output: dir.path().join("out"),
        ..Default::default()
    };
    assert!(cmd_campaign(&cfg).is_err());
    assert!(!cfg.output.join("raw.csv").exists());
}

#[test]
fn prior_plot_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prior.svg");
    cmd_plot_prior(&PlotPriorArgs {
        out: out.clone(),
        t_total: 20.0,
        n_support: 11,
        samples: 30,
        seed: 1,
    })
    .unwrap();
    let svg = fs::read_to_string(out).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    // 30 samples per profile plus the two power curves.
    let lines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    assert_eq!(lines, 62);
}

#[test]
fn config_file_and_flags_resolve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "count = 5\nk_samples = 200\narms = [\"homoscedastic\"]\n").unwrap();
    let o = Overrides {
        k_samples: Some(300),
        ..Default::default()
    };
    let cfg = CampaignConfig::from_toml_file(&path).unwrap();
    let mut merged = cfg.clone();
    o.apply(&mut merged);
    assert_eq!((cfg.count, cfg.k_samples), (5, 200));
    assert_eq!((merged.count, merged.k_samples), (5, 300));
    assert_eq!(merged.arms, vec![Profile::Homoscedastic]);
}
