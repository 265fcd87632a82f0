use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn chronoscope(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronoscope"))
        .args(args)
        .current_dir(dir)
        .env_remove("CHRONOSCOPE_OUT")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = chronoscope(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const FOUR_LINES: &str = "\
1104537600\thttp://www.ox.ac.uk/a\thttp://cam.ac.uk/
1104537700\thttp://ox.ac.uk/b\thttp://cam.ac.uk/x
1104537800\thttp://ox.ac.uk/c\thttp://ox.ac.uk/d
1104537900\thttp://bbc.co.uk/\thttp://ox.ac.uk/
";

#[test]
fn ingest_four_lines() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("links.tsv"), FOUR_LINES).unwrap();
    let stdout = ok(tmp.path(), &["ingest", "links.tsv", "--out-dir", "out"]);
    assert!(stdout.contains("self_loops\t1\n"));
    assert!(stdout.contains("records\t3\n"));
    let files: Vec<_> = fs::read_dir(tmp.path().join("out")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.len(), 2);
    assert_eq!(
        read(tmp.path().join("out/snapshot_2005.tsv")),
        "#snapshot v1 year=2005\nbbc.co.uk\tox.ac.uk\t1\nox.ac.uk\tcam.ac.uk\t2\n"
    );
    assert_eq!(read(tmp.path().join("out/ingest_summary.tsv")), stdout);
}

#[test]
fn strict_ingest_fails_with_one_line() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("links.tsv"), FOUR_LINES).unwrap();
    let out = chronoscope(tmp.path(), &["ingest", "links.tsv", "--strict"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error\tingest\t"), "{stderr}");
    assert!(stderr.contains("line 3"));
}

#[test]
fn shards_match_whole_file() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["synth", "links", "--lines", "20000", "--seed", "4"]);
    let text = read(tmp.path().join("links.tsv"));
    let lines: Vec<&str> = text.lines().collect();
    for (i, chunk) in lines.chunks(3000).enumerate() {
        fs::write(tmp.path().join(format!("part{i}.tsv")), chunk.join("\n") + "\n").unwrap();
    }
    let parts: Vec<String> = (0..lines.len().div_ceil(3000)).map(|i| format!("part{i}.tsv")).collect();
    let mut args = vec!["ingest", "--out-dir", "sharded"];
    args.extend(parts.iter().map(String::as_str));
    ok(tmp.path(), &args);
    ok(tmp.path(), &["ingest", "links.tsv", "--out-dir", "whole"]);
    for year in 2005..2009 {
        let name = format!("snapshot_{year}.tsv");
        assert_eq!(read(tmp.path().join("sharded").join(&name)), read(tmp.path().join("whole").join(&name)));
    }
}

#[test]
fn gravity_on_synthetic_output() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["synth", "gravity", "--exponent", "0.3", "--seed", "7", "--out-dir", "data"]);
    ok(tmp.path(), &["gravity", "data/snapshot_2010.tsv", "--geo", "data/geo.tsv", "--out-dir", "fit"]);
    let fit = read(tmp.path().join("fit/gravity_fit_2010.csv"));
    let mut lines = fit.lines();
    assert_eq!(lines.next(), Some("a,std_error,n_points,window,d_min_km,d_max_km,intercept"));
    let a: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((0.25..=0.35).contains(&a), "a = {a}");
    let series = read(tmp.path().join("fit/gravity_series_2010.csv"));
    assert!(series.starts_with("mean_d_km,mean_sigma\n"));
    let links = read(tmp.path().join("fit/geo_links_2010.csv"));
    // One row per linked ordered pair of the complete 200-node graph.
    assert_eq!(links.lines().count(), 1 + 200 * 199);
}

#[test]
fn gravity_options() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["synth", "gravity", "--n-nodes", "60", "--out-dir", "data"]);
    let base = ["gravity", "data/snapshot_2010.tsv", "--geo", "data/geo.tsv"];
    ok(tmp.path(), &[&base[..], &["--fit-raw", "--symmetrize", "mean", "--out-dir", "raw"]].concat());
    let fit = read(tmp.path().join("raw/gravity_fit_2010.csv"));
    let row: Vec<&str> = fit.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "1");
    // 60 nodes, symmetrized: 1770 unordered pairs, all further apart than 20 km.
    assert_eq!(row[2], "1770");
    let out = chronoscope(tmp.path(), &[&base[..], &["--window", "5000"]].concat());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error\tgravity\t"));
}

#[test]
fn stats_on_empty_snapshot() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("empty.tsv"), "#snapshot v1 year=1999\n").unwrap();
    ok(tmp.path(), &["stats", "empty.tsv", "--out-dir", "s"]);
    assert_eq!(read(tmp.path().join("s/sld_series.csv")), "year,sld,node_count,share\n");
    assert_eq!(read(tmp.path().join("s/flows_1999.csv")), "source_sld,target_sld,absolute,normalized\n");
    assert_eq!(read(tmp.path().join("s/within_sld.csv")), "year,sld,links_per_node\n");
}

#[test]
fn partition_commands() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["synth", "partition", "--n-nodes", "40", "--groups", "4", "--p-intra", "1", "--p-inter", "0"]);
    ok(tmp.path(), &["modularity", "snapshot_2010.tsv", "--partition", "partition.tsv"]);
    let q = read(tmp.path().join("modularity_2010.csv"));
    // Four disjoint equal cliques: Q = 1 - 4 * (1/4)^2.
    assert_eq!(q.lines().last(), Some("all,40,360,90,0.75"));
    ok(tmp.path(), &["density", "snapshot_2010.tsv", "--partition", "partition.tsv"]);
    let density = read(tmp.path().join("density_2010.csv"));
    assert_eq!(density, "group,members,density\ng0,10,1\ng1,10,1\ng2,10,1\ng3,10,1\n");
    ok(tmp.path(), &["export", "snapshot_2010.tsv", "--partition", "partition.tsv"]);
    let graphml = read(tmp.path().join("graph_2010.graphml"));
    assert_eq!(graphml.matches("<edge ").count(), 4 * 10 * 9);
    assert!(graphml.contains(r#"<node id="u0039.ac.uk"><data key="group">g3</data></node>"#));
}

#[test]
fn centrality_and_correlation() {
    let tmp = TempDir::new().unwrap();
    // In-strength follows the league order exactly.
    let snap = "#snapshot v1 year=2010\nhub.ac.uk\ta.ac.uk\t4\nhub.ac.uk\tb.ac.uk\t3\nhub.ac.uk\tc.ac.uk\t2\n";
    fs::write(tmp.path().join("s.tsv"), snap).unwrap();
    fs::write(tmp.path().join("rank.tsv"), "a.ac.uk\t1\nb.ac.uk\t2\nc.ac.uk\t3\n").unwrap();
    ok(tmp.path(), &["centrality", "s.tsv"]);
    let table = read(tmp.path().join("centrality_2010.csv"));
    assert!(table.starts_with(
        "node,in_degree,out_degree,in_strength,out_strength,pagerank,betweenness,closeness,harmonic,hub,authority\n"
    ));
    assert_eq!(table.lines().count(), 5);
    ok(tmp.path(), &["correlate", "s.tsv", "--ranking", "rank.tsv"]);
    let corr = read(tmp.path().join("correlations_2010.csv"));
    assert!(corr.contains("in_strength,1,3\n"), "{corr}");
    assert!(corr.contains("in_degree,NA,3\n"), "{corr}");
}

#[test]
fn reruns_are_byte_identical_and_env_sets_out_dir() {
    let tmp = TempDir::new().unwrap();
    let run = |out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_chronoscope"))
            .args(["synth", "partition", "--noise", "0.5", "--seed", "3"])
            .current_dir(tmp.path())
            .env("CHRONOSCOPE_OUT", out)
            .status()
            .unwrap();
        assert!(status.success());
        let status = Command::new(env!("CARGO_BIN_EXE_chronoscope"))
            .args(["centrality", &format!("{out}/snapshot_2010.tsv")])
            .current_dir(tmp.path())
            .env("CHRONOSCOPE_OUT", out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    run("first");
    run("second");
    for name in ["snapshot_2010.tsv", "partition.tsv", "centrality_2010.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("first").join(name)).unwrap(),
            fs::read(tmp.path().join("second").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn year_filter_and_errors() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("a.tsv"), "#snapshot v1 year=2001\nx.ac.uk\ty.ac.uk\t1\n").unwrap();
    fs::write(tmp.path().join("b.tsv"), "#snapshot v1 year=2002\nx.ac.uk\ty.ac.uk\t1\n").unwrap();
    ok(tmp.path(), &["stats", "a.tsv", "b.tsv", "--year", "2002"]);
    assert!(tmp.path().join("flows_2002.csv").exists());
    assert!(!tmp.path().join("flows_2001.csv").exists());

    fs::write(tmp.path().join("bad.tsv"), "#snapshot v1 year=2001\nx.ac.uk\tx.ac.uk\t1\n").unwrap();
    let out = chronoscope(tmp.path(), &["stats", "bad.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error\tsnapshot\t") && stderr.lines().count() == 1, "{stderr}");

    assert_eq!(chronoscope(tmp.path(), &["stats"]).status.code(), Some(2));
    assert_eq!(chronoscope(tmp.path(), &["ingest", "a.tsv", "--year-select", "latest"]).status.code(), Some(2));
    assert_eq!(chronoscope(tmp.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn custom_policy() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("policy.txt"), "# New Zealand\nnz\nac.nz\nco.nz\n").unwrap();
    fs::write(
        tmp.path().join("links.tsv"),
        "1104537600\thttp://auckland.ac.nz/\thttp://stuff.co.nz/\n1104537601\thttp://x.net.nz/\thttp://stuff.co.nz/\n",
    )
    .unwrap();
    let stdout = ok(tmp.path(), &["ingest", "links.tsv", "--policy", "policy.txt"]);
    assert!(stdout.contains("unknown_sld\t1\n"));
    let stdout =
        ok(tmp.path(), &["ingest", "links.tsv", "--policy", "policy.txt", "--unknown-sld", "treat-as-2-level"]);
    assert!(stdout.contains("records\t2\n"));
    assert!(read(tmp.path().join("snapshot_2005.tsv")).contains("net.nz\tstuff.co.nz\t1"));
}
