//! One-off generator for the 10-frame metric regression fixture
//! (`tests/fixtures/regression10/`). Run manually after intentional metric
//! changes: `cargo test -p pitchtrack --test gen_fixture -- --ignored --nocapture`,
//! then refresh the frozen numbers in the acceptance suite.

use std::path::PathBuf;

use pitchtrack::eval::{aggregate, format_summary, score_frame};
use pitchtrack::field::{build_template, SampledTemplate};
use pitchtrack::io::{truth_record, write_jsonl, ReportRecord};
use pitchtrack::sim::{generate, TrajectorySpec};

#[test]
#[ignore = "fixture generator, run manually"]
fn generate_regression_fixture() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/regression10");
    std::fs::create_dir_all(&dir).unwrap();

    let spec = TrajectorySpec { frames: 10, seed: 314, ..Default::default() };
    let frames = generate(&spec).unwrap();

    // predictions: truth for frames 0-4, pan-perturbed for 5-7, absent 8-9
    let mut predictions: Vec<ReportRecord> = Vec::new();
    for frame in &frames {
        if frame.frame >= 8 {
            continue;
        }
        let mut cam = frame.truth;
        if frame.frame >= 5 {
            cam.pan += 0.16_f64.to_radians();
        }
        let mut record = truth_record(frame.frame, &cam);
        record.status = "tracking".to_string();
        predictions.push(record);
    }
    let annotations: Vec<_> = frames.iter().map(|f| f.to_annotation_record()).collect();

    write_jsonl(&dir.join("predictions.jsonl"), &predictions).unwrap();
    write_jsonl(&dir.join("annotations.jsonl"), &annotations).unwrap();

    // print the summary so the frozen constants can be refreshed
    let template = build_template(&spec.dimensions().unwrap()).unwrap();
    let sampled = SampledTemplate::new(&template, 0.05);
    let scores: Vec<_> = frames
        .iter()
        .map(|f| {
            let cam = predictions
                .iter()
                .find(|p| p.frame == f.frame)
                .and_then(|p| p.camera.as_ref())
                .map(|c| c.to_state());
            score_frame(cam.as_ref(), &f.annotation, &sampled, &[5.0, 10.0])
        })
        .collect();
    for s in &scores {
        println!(
            "frame {}: jac5 {:.6} jac10 {:.6} tp {:?} fp {} fn {:?}",
            s.frame, s.jaccard[0], s.jaccard[1], s.tp, s.fp, s.fn_
        );
    }
    let summary = aggregate(&scores, frames.len());
    println!("{}", format_summary(&summary));
    println!(
        "frozen: jac5 {:.12} jac10 {:.12} mre {:.12} medre {:.12} cr {:.12}",
        summary.jaccard_percent[0],
        summary.jaccard_percent[1],
        summary.mre_px,
        summary.medre_px,
        summary.cr_percent
    );
}
