//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{rngs::StdRng, Rng, SeedableRng};
use serde_json::Value;
use tactile_core::engine::EngineConfig;
use tactile_core::environment::{
    detection_coverage, knn_classify, Action, Event, Mode, RecognizerConfig,
};
use tactile_core::evaluator::{average_precision, evaluate};
use tactile_core::grid::{assign_cells, cell_overlap};
use tactile_core::ingestion::filter_valid;
use tactile_core::wire::encode_snapshot;
use tactile_core::{
    BoundingBox, Detection, Engine, EngineState, EnvironmentProfile, FeatureHistogram, Frame,
    GridSpec, Recognizer,
};
use tactile_oracles::{
    any_box, brute_force_map, exhaustive_knn, intersecting_cells, lattice_box, micro_dataset,
    raster_cell_overlaps, Obj,
};
use tactile_scene::assets::{load_assets, Assets};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn assets() -> Assets {
    load_assets(
        &fixture("exemplars.jsonl"),
        Some(&fixture("vocab.json")),
        Some(&fixture("manifest.json")),
    )
    .expect("fixture assets")
}

fn to_frames(objs: &[Obj], n_images: u64) -> Vec<Frame> {
    (1..=n_images)
        .map(|id| {
            let dets = objs
                .iter()
                .filter(|o| o.image == id)
                .map(|o| Detection {
                    class_id: o.class,
                    confidence: o.conf,
                    bbox: BoundingBox::new(o.bbox[0], o.bbox[1], o.bbox[2], o.bbox[3]).unwrap(),
                })
                .collect();
            Frame::new(id, id, 640, 480).with_detections(dets)
        })
        .collect()
}

fn evaluator_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xacce_0001);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for _ in 0..100 {
        let (gts, preds, n) = micro_dataset(&mut rng, 3, 5, 8);
        let expected = brute_force_map(&gts, &preds, 0.5);
        let got = evaluate(&to_frames(&preds, n), &to_frames(&gts, n), 0.5);
        match (expected, got) {
            (None, Err(_)) => {}
            (Some(e), Ok(r)) => {
                worst = worst.max((r.map - e).abs());
                compared += 1;
            }
            (e, g) => return Err(format!("oracle {e:?} vs evaluator {:?}", g.map(|r| r.map))),
        }
        if !gts.is_empty() {
            let perfect: Vec<Obj> = gts
                .iter()
                .map(|g| Obj {
                    conf: 1.0,
                    ..g.clone()
                })
                .collect();
            let m = evaluate(&to_frames(&perfect, n), &to_frames(&gts, n), 0.5)
                .map_err(|e| e.to_string())?
                .map;
            check(m == 1.0, || format!("perfect predictions scored {m}"))?;
        }
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-9, || format!("max |mAP - oracle| = {worst:e}"))?;
    check(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{compared} datasets, max |diff| = {worst:.1e}, perfect = 1.0, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn ap_fixtures() -> Outcome {
    let cases: [(&[bool], usize, f64); 3] = [
        (&[true], 1, 1.0),
        (&[false, true], 1, 0.5),
        (&[true, true], 4, 0.5),
    ];
    for (flags, n_gt, want) in cases {
        let got: f64 = average_precision(flags, n_gt).unwrap();
        check(got == want, || {
            format!("{flags:?} n_gt={n_gt}: {got} != {want}")
        })?;
    }
    Ok("[TP]/1 = 1.0, [FP,TP]/1 = 0.5, [TP,TP]/4 = 0.5".into())
}

fn grid_oracle() -> Outcome {
    let start = Instant::now();
    let spec = GridSpec::default();
    let mut rng = StdRng::seed_from_u64(0xacce_0003);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let raw = lattice_box(&mut rng);
        let b = BoundingBox::new(raw[0], raw[1], raw[2], raw[3]).unwrap();
        for (i, want) in raster_cell_overlaps(raw, 4, 4).into_iter().enumerate() {
            worst = worst.max((cell_overlap(&b, spec.cell_at(i), &spec) - want).abs());
        }
    }
    check(worst <= 1e-3, || format!("max overlap error {worst}"))?;
    for n in 0..10_000 {
        let raw = any_box(&mut rng);
        let b = BoundingBox::new(raw[0], raw[1], raw[2], raw[3]).unwrap();
        let cells = assign_cells(&b, &spec);
        check(!cells.is_empty(), || {
            format!("detection {n} {raw:?} has no cell")
        })?;
        let touching = intersecting_cells(raw, 4, 4);
        check(
            cells
                .iter()
                .all(|(c, _)| touching.contains(&(c.row, c.col))),
            || format!("detection {n} {raw:?} assigned to a cell it does not touch"),
        )?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "1000 boxes max error {worst:.1e}; 10000 detections all assigned; {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn confidence_gate() -> Outcome {
    let det = |confidence| Detection {
        class_id: 0,
        confidence,
        bbox: BoundingBox::new(0.1, 0.1, 0.2, 0.2).unwrap(),
    };
    let frame = Frame::new(1, 0, 640, 480).with_detections(vec![det(0.5), det(0.5 + 1e-9)]);
    let kept = filter_valid(frame.clone(), 0.5);
    check(kept.detections.len() == 1, || {
        format!("{} detections kept", kept.detections.len())
    })?;
    check(kept.detections[0].confidence > 0.5, || {
        "0.5 was kept".into()
    })?;

    let a = assets();
    let mut engine = Engine::new(a.vocab, a.profiles, &a.manifest, EngineConfig::default())
        .map_err(|e| e.to_string())?;
    let (snapshot, _) = engine.process_frame(frame);
    let shown: usize = snapshot.cells.iter().map(Vec::len).sum();
    check(snapshot.counters.gated_out == 1, || {
        format!("engine gated {} detections", snapshot.counters.gated_out)
    })?;
    check(shown == 1, || format!("{shown} grid entries"))?;
    Ok("conf 0.5 excluded, 0.5+1e-9 included (filter and engine)".into())
}

fn office_frame(id: u64, classes: &[usize]) -> Frame {
    let dets = classes
        .iter()
        .map(|&class_id| Detection {
            class_id,
            confidence: 0.9,
            bbox: BoundingBox::new(0.3, 0.3, 0.2, 0.2).unwrap(),
        })
        .collect();
    Frame::new(id, id * 33, 640, 480).with_detections(dets)
}

type KnnInstance = (
    Vec<f64>,
    Vec<EnvironmentProfile>,
    Vec<(Vec<f64>, String)>,
    usize,
);

fn random_knn(rng: &mut StdRng) -> KnnInstance {
    let dim = rng.gen_range(1..=20);
    let labels = ["bedroom", "kitchen", "office"];
    let n = rng.gen_range(1..=50);
    let mut profiles: Vec<EnvironmentProfile> = labels
        .iter()
        .map(|l| EnvironmentProfile::new(*l, vec![0], Vec::new()).unwrap())
        .collect();
    let mut flat = Vec::new();
    for i in 0..n {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(0..3) as f64).collect();
        if v.iter().all(|&x| x == 0.0) {
            v[0] = 1.0;
        }
        profiles[i % 3]
            .exemplars
            .push(FeatureHistogram { counts: v.clone() });
        flat.push((v, labels[i % 3].to_string()));
    }
    let mut q: Vec<f64> = (0..dim).map(|_| rng.gen_range(0..4) as f64).collect();
    if q.iter().all(|&x| x == 0.0) {
        q[0] = 3.0;
    }
    let k = rng.gen_range(1..=n.min(7));
    (q, profiles, flat, k)
}

fn state_machine() -> Outcome {
    let a = assets();
    let w = 30;
    let config = RecognizerConfig {
        window: w,
        ..Default::default()
    };
    let office_classes = a.vocab.classes_of("office");
    let laptop = a.vocab.id_of("laptop").unwrap();
    let office = a
        .profiles
        .iter()
        .find(|p| p.label == "office")
        .unwrap()
        .clone();
    let rec = Recognizer::new(a.profiles, config).map_err(|e| e.to_string())?;

    let mut state = EngineState::default();
    let mut id = 0;
    while state.mode == Mode::Recognizing {
        id += 1;
        check(id <= w as u64, || "office never recognized".into())?;
        let k = id as usize % office_classes.len();
        let classes = [
            office_classes[k],
            office_classes[(k + 3) % 7],
            office_classes[(k + 5) % 7],
        ];
        state = rec
            .step(state, Event::NewFrame(office_frame(id, &classes)))
            .0;
    }
    check(state.mode == Mode::Detecting("office".into()), || {
        format!("{:?}", state.mode)
    })?;

    let mut recent: VecDeque<Frame> = VecDeque::new();
    let mut restarted_after = None;
    for n in 1..=w {
        id += 1;
        let f = office_frame(id, &[laptop]);
        recent.push_back(f.clone());
        let (next, actions) = rec.step(state, Event::NewFrame(f));
        state = next;
        if actions.contains(&Action::RecognitionRestarted) {
            restarted_after = Some(n);
            break;
        }
    }
    let n = restarted_after.ok_or("no restart within W laptop-only frames")?;
    let coverage: f64 = detection_coverage(&recent, &office);
    check((coverage - 1.0 / 7.0).abs() < 1e-12, || {
        format!("coverage {coverage}")
    })?;
    check(state.mode == Mode::Recognizing, || {
        format!("{:?}", state.mode)
    })?;

    let mut detecting = EngineState {
        mode: Mode::Detecting("office".into()),
        ..Default::default()
    };
    detecting.window.push_back(office_frame(1, &office_classes));
    let (after, actions) = rec.step(detecting, Event::LocationChanged);
    check(
        after.mode == Mode::Recognizing
            && after.window.is_empty()
            && actions == [Action::RecognitionRestarted],
        || "location change did not restart immediately".into(),
    )?;

    let mut rng = StdRng::seed_from_u64(0xacce_0005);
    for i in 0..100 {
        let (q, profiles, flat, k) = random_knn(&mut rng);
        let h = FeatureHistogram { counts: q.clone() };
        let got = knn_classify(&h, &profiles, k).map_err(|e| e.to_string())?;
        let want = exhaustive_knn(&q, &flat, k);
        check(got == want, || {
            format!("instance {i}: {got} vs exhaustive {want}")
        })?;
        for s in [3.0, 0.25] {
            let scaled = knn_classify(&h.scaled(s), &profiles, k).map_err(|e| e.to_string())?;
            check(scaled == got, || {
                format!("instance {i}: scaling by {s} changed {got} to {scaled}")
            })?;
        }
    }
    Ok(format!(
        "restart after {n} laptop-only frames at coverage 1/7; location change immediate; kNN = exhaustive on 100, scale-invariant"
    ))
}

fn run_with_log(log: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tactile-scene"))
        .arg("run")
        .arg("--input")
        .arg(fixture("replay_50.jsonl"))
        .arg("--exemplars")
        .arg(fixture("exemplars.jsonl"))
        .arg("--vocab")
        .arg(fixture("vocab.json"))
        .arg("--manifest")
        .arg(fixture("manifest.json"))
        .args(["--window", "10", "--speed", "1000", "--log"])
        .arg(log)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    run_with_log(&a)?;
    run_with_log(&b)?;
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    check(ta == tb, || "logs differ".into())?;

    let vocab: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&std::fs::read_to_string(fixture("vocab.json")).unwrap()).unwrap();
    let text = String::from_utf8(ta).unwrap();
    let mut modes = BTreeMap::new();
    let mut lines = 0;
    for line in text.lines() {
        lines += 1;
        let s: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let mode = match s["env"].as_str() {
            Some(env) => format!("detecting {env}"),
            None => "recognizing".into(),
        };
        *modes.entry(mode).or_insert(0) += 1;
        if let Some(env) = s["env"].as_str() {
            let allowed = &vocab[env];
            for item in s["cells"]
                .as_array()
                .unwrap()
                .iter()
                .flat_map(|c| c.as_array().unwrap())
            {
                let class = item["class"].as_str().unwrap();
                check(allowed.iter().any(|c| c == class), || {
                    format!("frame {}: {class} shown while detecting {env}", s["frame"])
                })?;
            }
        }
    }
    check(lines == 50, || format!("{lines} snapshots logged"))?;
    check(modes.len() == 3, || format!("modes seen: {modes:?}"))?;
    Ok(format!(
        "2 runs, {lines} identical snapshots; filter holds; {modes:?}"
    ))
}

fn throughput() -> Outcome {
    let a = assets();
    let mut rng = StdRng::seed_from_u64(0xacce_0007);
    let names = a.vocab.names().to_vec();
    let frames = 1000u64;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("load.jsonl");
    let mut text = String::new();
    let mut parsed = Vec::new();
    for id in 1..=frames {
        let mut dets = Vec::new();
        let mut records = Vec::new();
        for _ in 0..50 {
            let raw = any_box(&mut rng);
            let class = rng.gen_range(0..names.len());
            let conf: f64 = rng.gen_range(0.3..1.0);
            records.push(serde_json::json!({
                "class": names[class],
                "conf": conf,
                "bbox": [raw[0] * 640.0, raw[1] * 480.0, raw[2] * 640.0, raw[3] * 480.0],
            }));
            dets.push(Detection {
                class_id: class,
                confidence: conf,
                bbox: BoundingBox::new(raw[0], raw[1], raw[2], raw[3]).unwrap(),
            });
        }
        text.push_str(
            &serde_json::json!({"frame": id, "ts_ms": id * 33, "img_w": 640, "img_h": 480, "detections": records})
                .to_string(),
        );
        text.push('\n');
        parsed.push(Frame::new(id, id * 33, 640, 480).with_detections(dets));
    }
    std::fs::write(&input, text).map_err(|e| e.to_string())?;

    let mut engine = Engine::new(a.vocab, a.profiles, &a.manifest, EngineConfig::default())
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut bytes = 0;
    for f in parsed {
        bytes += encode_snapshot(&engine.process_frame(f).0).len();
    }
    let in_process = frames as f64 / start.elapsed().as_secs_f64();

    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_tactile-scene"))
        .arg("run")
        .arg("--input")
        .arg(&input)
        .arg("--exemplars")
        .arg(fixture("exemplars.jsonl"))
        .arg("--vocab")
        .arg(fixture("vocab.json"))
        .args(["--speed", "1000000", "--log"])
        .arg(dir.path().join("load.log"))
        .output()
        .map_err(|e| e.to_string())?;
    let binary = frames as f64 / start.elapsed().as_secs_f64();
    check(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    check(bytes > 0, || "nothing encoded".into())?;
    check(binary >= 100.0, || {
        format!("{binary:.0} frames/s end to end")
    })?;
    Ok(format!(
        "{binary:.0} frames/s end to end (CLI, parse to log), {in_process:.0} frames/s in process; 50 detections/frame, 4x4"
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("evaluator matches brute-force PR curves", evaluator_oracle),
        ("hand-computed AP fixtures", ap_fixtures),
        ("grid mapping matches rasterization", grid_oracle),
        ("confidence gate is strict", confidence_gate),
        ("recognition state machine and kNN", state_machine),
        ("end-to-end replay determinism", determinism),
        ("throughput at least 100 frames/s", throughput),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
