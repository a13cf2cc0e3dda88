use std::path::{Path, PathBuf};

use proptest::prelude::*;

use socnewton::bench::{
    run_bench, run_regions, write_instances_csv, write_summary_csv, BenchConfig, InstanceResult,
    Suite, INSTANCE_CSV_HEADER, SUMMARY_CSV_HEADER,
};
use socnewton::linalg::mm;
use socnewton::probgen::{gen_lsoccp, gen_pwls, GenSpec};
use socnewton::problem_file::{Problem, ProblemFile};

fn spec_strategy() -> impl Strategy<Value = GenSpec> {
    (2usize..12, any::<u64>(), 0u8..3).prop_map(|(n, seed, k)| match k {
        0 => GenSpec::dense(n, seed),
        1 => GenSpec::sparse(n, 0.5, seed),
        _ => GenSpec::spd(n, seed),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inline_text_round_trips(spec in spec_strategy(), lsoccp in any::<bool>()) {
        let problem = if lsoccp {
            Problem::Lsoccp(gen_lsoccp(&spec).unwrap())
        } else {
            Problem::Pwls(gen_pwls(&spec).unwrap())
        };
        let file = ProblemFile { provenance: Some(spec), ..ProblemFile::new(problem) };
        let text = file.to_text();
        let back = ProblemFile::parse(&text, Path::new(".")).unwrap();
        prop_assert_eq!(back.problem.matrix().to_dense_values(), file.problem.matrix().to_dense_values());
        prop_assert_eq!(&back.provenance, &file.provenance);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn side_file_round_trips(spec in spec_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        let file = ProblemFile {
            matrix_path: Some(PathBuf::from("p.mtx")),
            provenance: Some(spec.clone()),
            ..ProblemFile::new(Problem::Pwls(gen_pwls(&spec).unwrap()))
        };
        file.write(&path).unwrap();
        let back = ProblemFile::read(&path).unwrap();
        prop_assert_eq!(back.problem.matrix().to_dense_values(), file.problem.matrix().to_dense_values());
        prop_assert_eq!(back.to_text(), file.to_text());
        let mut first = Vec::new();
        mm::write(file.problem.matrix(), &mut first).unwrap();
        let mut second = Vec::new();
        mm::write(&mm::read(first.as_slice()).unwrap(), &mut second).unwrap();
        prop_assert_eq!(first, second);
    }
}

fn strip_timing(results: &[InstanceResult]) -> Vec<InstanceResult> {
    results.iter().map(|r| InstanceResult { time_s: 0.0, ..r.clone() }).collect()
}

#[test]
fn bench_is_deterministic_and_thread_independent() {
    let one = BenchConfig::new(Suite::Dense, 30, 9, 5);
    let many = BenchConfig { threads: 4, ..one.clone() };
    let (row_a, a) = run_bench(&one).unwrap();
    let (row_b, b) = run_bench(&many).unwrap();
    assert_eq!(strip_timing(&a), strip_timing(&b));
    assert_eq!(row_a.solved, row_b.solved);
    assert_eq!(row_a.avg_iters, row_b.avg_iters);
    assert!(a.iter().enumerate().all(|(i, r)| r.index == i && r.seed == 5 + i as u64));
}

#[test]
fn csv_outputs_have_one_row_per_instance() {
    for suite in [Suite::Dense, Suite::Sparse, Suite::Spd] {
        let cfg = BenchConfig { density: 0.2, ..BenchConfig::new(suite, 20, 7, 3) };
        let (row, results) = run_bench(&cfg).unwrap();
        assert!(row.solved <= row.total && row.total == 7);
        if row.solved > 0 {
            assert!(row.avg_iters >= 1.0);
        }

        let mut buf = Vec::new();
        write_instances_csv(&results, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rd.headers().unwrap(), INSTANCE_CSV_HEADER.as_slice());
        assert_eq!(rd.records().count(), 7);

        let mut buf = Vec::new();
        write_summary_csv(&[row], &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rd.headers().unwrap(), SUMMARY_CSV_HEADER.as_slice());
        let recs: Vec<_> = rd.records().collect::<Result<_, _>>().unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(&recs[0][0], suite.name());
    }
}

#[test]
fn regions_agree_on_the_solution() {
    let cfg = BenchConfig::new(Suite::Dense, 40, 4, 9);
    let report = run_regions(&cfg).unwrap();
    assert_eq!(report.regions.len(), 3);
    for r in &report.regions {
        assert_eq!(r.total, 4);
        assert_eq!(r.solved, 4);
    }
    assert_eq!(report.identical_solutions, report.compared);
}
