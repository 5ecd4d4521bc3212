use std::fs;

use proptest::collection::{btree_set, vec};
use proptest::prelude::*;

use sqflow::dataset::filter::coverage_filter;
use sqflow::dataset::split::{apply_recipe, SplitRecipe};
use sqflow::dataset::{compile_root, leakage_check, partition_dirs, read_partition, read_partition_with, write_partition};
use sqflow::dataset::{quantize, DatasetPartition, ImageShape};

fn row(side: usize) -> impl Strategy<Value = Vec<u32>> {
    btree_set(0..(side * side) as u32, 0..=(side * side).min(64)).prop_map(|s| s.into_iter().collect())
}

fn partition(dp_side: usize, vof_side: usize) -> impl Strategy<Value = DatasetPartition> {
    vec((1e-12f64..2.0, 1e-9f64..1e-6, row(dp_side), row(vof_side)), 0..8).prop_map(move |rows| {
        let mut p = DatasetPartition::empty(ImageShape { dp_side, vof_side });
        for (t, h, dp, vof) in rows {
            p.push(t, h, dp, vof).unwrap();
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn written_partitions_read_back_identically(p in partition(20, 160)) {
        let dir = tempfile::tempdir().unwrap();
        write_partition(&p, dir.path()).unwrap();
        prop_assert_eq!(read_partition(dir.path()).unwrap(), p);
    }

    #[test]
    fn small_shapes_round_trip(p in partition(3, 7)) {
        let dir = tempfile::tempdir().unwrap();
        write_partition(&p, dir.path()).unwrap();
        prop_assert_eq!(read_partition_with(dir.path(), p.shape).unwrap(), p);
    }

    #[test]
    fn quantize_is_a_fixed_point(x in 1e-13f64..10.0) {
        let q = quantize(x);
        prop_assert_eq!(quantize(q), q);
        prop_assert!((q / x - 1.0).abs() < 1e-8);
    }

    #[test]
    fn filter_is_idempotent(p in partition(4, 12), window in 1usize..=12, max in 0.0f64..=1.0) {
        let once = coverage_filter(&p, window, max);
        prop_assert_eq!(coverage_filter(&once, window, max), once.clone());
        prop_assert!(once.len() <= p.len());
    }
}

fn one_row(dp: Vec<u32>, vof: Vec<u32>) -> DatasetPartition {
    let mut p = DatasetPartition::default();
    p.push(1e-3, 2e-7, dp, vof).unwrap();
    p
}

#[test]
fn empty_rows_are_blank_lines() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = one_row(vec![0, 399], vec![]);
    p.push(2e-3, 1e-7, vec![5], vec![1, 2, 3]).unwrap();
    write_partition(&p, dir.path()).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("vof.csv")).unwrap(), "\n1,2,3\n");
    assert_eq!(fs::read_to_string(dir.path().join("dp.csv")).unwrap(), "0,399\n5\n");
    assert_eq!(fs::read_to_string(dir.path().join("t.csv")).unwrap(), "1.00000000e-3\n2.00000000e-3\n");
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_partition(&one_row(vec![3], vec![10, 11]), dir.path()).unwrap();
    let vof = dir.path().join("vof.csv");
    for bad in ["11,10\n", "10,10\n", "25600\n", "x\n", "1,\n"] {
        fs::write(&vof, bad).unwrap();
        assert!(read_partition(dir.path()).is_err(), "{bad:?}");
    }
    fs::write(&vof, "10\n12\n").unwrap();
    assert!(read_partition(dir.path()).is_err(), "column lengths differ");
    fs::write(&vof, "10\n").unwrap();
    fs::write(dir.path().join("h.csv"), "nan\n").unwrap();
    assert!(read_partition(dir.path()).is_err());
}

#[test]
fn compile_root_walks_sim_dirs_in_order() {
    let root = tempfile::tempdir().unwrap();
    for (cat, sim, dp) in [(5, 1, 7u32), (1, 0, 2), (5, 0, 4)] {
        write_partition(&one_row(vec![dp], vec![dp]), &root.path().join(format!("{cat}/{sim:04}"))).unwrap();
    }
    fs::write(root.path().join("5/summary.txt"), "not a partition\n").unwrap();
    let all = compile_root(root.path()).unwrap();
    assert_eq!(all.dp, vec![vec![2], vec![4], vec![7]]);
    assert_eq!(partition_dirs(root.path()).unwrap().len(), 3);

    fs::remove_file(root.path().join("5/0001/h.csv")).unwrap();
    assert!(compile_root(root.path()).is_err());
}

#[test]
fn recipe_splits_whole_simulations_without_leakage() {
    let root = tempfile::tempdir().unwrap();
    for sim in 0..8u32 {
        let mut p = one_row(vec![sim], vec![]);
        p.push(2e-3, 1e-7, vec![sim], vec![sim]).unwrap();
        write_partition(&p, &root.path().join(format!("1/{sim:04}"))).unwrap();
    }
    for sim in 0..2u32 {
        write_partition(&one_row(vec![100 + sim], vec![]), &root.path().join(format!("4/{sim:04}"))).unwrap();
    }
    let recipe = SplitRecipe::parse(
        "training.1 = 0.5\ntraining.4 = 1.0\nvalidation.1 = 0.25\ntest.1 = 0.25\n",
        std::path::Path::new("r.conf"),
    )
    .unwrap();
    let splits = apply_recipe(root.path(), &recipe).unwrap();
    let lens: Vec<(&str, usize)> = splits.iter().map(|(n, p)| (n.as_str(), p.len())).collect();
    assert_eq!(lens, [("training", 10), ("validation", 4), ("test", 4)]);
    let named: Vec<(&str, &DatasetPartition)> = splits.iter().map(|(n, p)| (n.as_str(), p)).collect();
    assert!(leakage_check(&named).is_clean());
}
