//! Golden-report regression test: any change to fold assignment, seed
//! derivation, the pipeline, the search, or report serialization shows up
//! as a diff against the committed report.
//!
//! After an intentional protocol change, regenerate the golden file with
//! `UPDATE_GOLDEN=1 cargo test -p dispel-core --test golden_report`.

use std::path::{Path, PathBuf};

use dispel_core::classify::Protocol;
use dispel_core::harness::{config_for, run_comparison_on, KnnK, SearchConfig};
use dispel_core::reduction::ReductionConfig;
use dispel_core::synth::random_blobs;

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden_report.json")
}

#[test]
fn report_matches_committed_golden() {
    let d = random_blobs(314159).unwrap();
    let config = config_for(
        ReductionConfig::srda(),
        KnnK::Fixed(3),
        Protocol {
            folds: 4,
            repeats: 2,
            seed: 271828,
        },
        SearchConfig::grid(-3, 9, 42),
    );
    let mut report = run_comparison_on(&d, &config, &Default::default()).unwrap();
    report.metadata.unix_timestamp = 0;
    let mut json = report.to_json().unwrap();
    json.push('\n');

    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &json).unwrap();
        return;
    }
    let golden = std::fs::read_to_string(golden_path())
        .expect("golden file missing; run with UPDATE_GOLDEN=1 to create it");
    assert_eq!(
        json, golden,
        "report drifted from the committed golden; if the change is \
         intentional, regenerate with UPDATE_GOLDEN=1"
    );
}
