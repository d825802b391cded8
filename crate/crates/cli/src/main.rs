//! Batch experiment driver: builds and checkpoints the dovetailed
//! enumeration, emits halting-mass tables, validates streams, computes
//! information-content reports, and samples measurement outcomes. All
//! artifacts are deterministic functions of the configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde_json::{json, Value};

use opait_core::dovetail::{
    floor_certificate, guarded_stream, universal_stream, DovetailState,
};
use opait_core::hhat::{
    hhat_derived, hhat_upper, psi_transport, DerivedKind, PsiMap,
};
use opait_core::json::{ratio_to_json, state_from_json};
use opait_core::machine::{Enumerator, TableMachine, Vm, Word};
use opait_core::rational::{pow2, ratio_to_string};
use opait_core::semimeasure::{
    from_increasing_sequence, to_increasing_sequence, validate_semimeasure,
    IncreasingSequence, SemiMeasureStream,
};
use opait_core::semipovm::{
    measurement_distribution, projective_stream, sample_batch, scalar_embed,
    validate_semipovm, MeasurementOutcome, SemiPovmStream,
};
use opait_core::StateVector;

const USAGE: &str = "\
usage: opait <command> [flags]

commands:
  machine enum      --stages N [--machine FILE]            discovered halting programs
  omega approx      --stages N [--machine FILE]            halting-mass lower bounds
  upovm build       --stages N --checkpoint FILE [--resume] build/extend the enumeration
  upovm omegahat    --stages N --window M --state SPEC     quadratic forms of the mass bound
  upovm validate    --stream NAME --depth N                stream invariant report
  measure sample    --stream NAME --stage N --state SPEC --window M --seed S --draws K
  hhat report       --s BITS --stages N [--eps-bits B] [--pair BITS] [--state SPEC]
  convert sm2seq    --stream pv|complexity --stages N [--machine FILE]
  convert seq2sm    --divisor D --stages N [--machine FILE]
  psi transport     --psi identity|swap|empty --stages N

common flags:
  --config FILE   key=value defaults (flags win)
  --out FILE      write the artifact to a file instead of stdout
  --jobs N        worker cap for enumeration scans
  --selfcheck     re-validate the emitted artifact
  --checkpoint F  reuse / produce enumeration state where applicable

stream names: projective | universal | scalar-embed | shift-projective |
              guarded:<l> | psi:identity | psi:swap | psi:empty

state specs: e<k> (basis vector) or a path to a state JSON file";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(run(&args));
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type CliResult = Result<(), Failure>;

fn run(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(f) => {
            let payload = json!({ "error": f.message, "code": f.code });
            eprintln!("{payload}");
            f.code
        }
    }
}

struct Options {
    values: BTreeMap<String, String>,
    switches: BTreeSet<String>,
}

impl Options {
    fn parse(args: &[String]) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        let mut switches = BTreeSet::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(key) = arg.strip_prefix("--") else {
                return Err(fail(2, format!("unexpected argument {arg:?}")));
            };
            if matches!(key, "resume" | "selfcheck" | "sweep") {
                switches.insert(key.to_string());
                i += 1;
                continue;
            }
            let Some(value) = args.get(i + 1) else {
                return Err(fail(2, format!("flag --{key} needs a value")));
            };
            values.insert(key.to_string(), value.clone());
            i += 2;
        }
        // config file values fill the gaps, flags win
        if let Some(path) = values.get("config").cloned() {
            let text = fs::read_to_string(&path)
                .map_err(|e| fail(2, format!("cannot read config {path}: {e}")))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(fail(
                        2,
                        format!("config line {} is not key=value", lineno + 1),
                    ));
                };
                let k = k.trim().to_string();
                let v = v.trim().to_string();
                if matches!(k.as_str(), "resume" | "selfcheck" | "sweep") {
                    if v == "true" {
                        switches.insert(k);
                    }
                } else {
                    values.entry(k).or_insert(v);
                }
            }
        }
        Ok(Options { values, switches })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str, Failure> {
        self.get(key)
            .ok_or_else(|| fail(2, format!("missing required flag --{key}")))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, Failure> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .ok()
                .filter(|n| *n >= 1)
                .ok_or_else(|| fail(2, format!("--{key} must be a positive integer"))),
        }
    }

    fn require_u64(&self, key: &str) -> Result<u64, Failure> {
        self.require(key)?
            .parse::<u64>()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| fail(2, format!("--{key} must be a positive integer")))
    }

    fn switch(&self, key: &str) -> bool {
        self.switches.contains(key)
    }

    fn checkpoint_path(&self) -> Option<PathBuf> {
        let raw = self.get("checkpoint")?;
        match std::env::var("OPAIT_CHECKPOINT_DIR") {
            Ok(dir) if !dir.is_empty() => {
                let name = Path::new(raw).file_name().unwrap_or_default().to_owned();
                Some(Path::new(&dir).join(name))
            }
            _ => Some(PathBuf::from(raw)),
        }
    }
}

fn dispatch(args: &[String]) -> CliResult {
    let Some(first) = args.first() else {
        return Err(fail(2, USAGE));
    };
    let (command, rest): (String, &[String]) = match (first.as_str(), args.get(1)) {
        ("machine", Some(sub)) | ("omega", Some(sub)) | ("upovm", Some(sub))
        | ("measure", Some(sub)) | ("convert", Some(sub)) | ("psi", Some(sub))
        | ("hhat", Some(sub)) => (format!("{first} {sub}"), &args[2..]),
        _ => (first.clone(), &args[1..]),
    };
    let opts = Options::parse(rest)?;
    match command.as_str() {
        "machine enum" => cmd_machine_enum(&opts),
        "omega approx" => cmd_omega_approx(&opts),
        "upovm build" => cmd_upovm_build(&opts),
        "upovm omegahat" => cmd_upovm_omegahat(&opts),
        "upovm validate" => cmd_upovm_validate(&opts),
        "measure sample" => cmd_measure_sample(&opts),
        "hhat report" => cmd_hhat_report(&opts),
        "convert sm2seq" => cmd_convert_sm2seq(&opts),
        "convert seq2sm" => cmd_convert_seq2sm(&opts),
        "psi transport" => cmd_psi_transport(&opts),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(fail(2, format!("unknown command {other:?}\n\n{USAGE}"))),
    }
}

fn emit(opts: &Options, artifact: &str) -> CliResult {
    match opts.get("out") {
        None => {
            print!("{artifact}");
            Ok(())
        }
        Some(path) => {
            fs::write(path, artifact).map_err(|e| fail(2, format!("cannot write {path}: {e}")))
        }
    }
}

fn build_enumerator(opts: &Options) -> Result<Arc<Enumerator>, Failure> {
    let jobs = opts.u64_or("jobs", 1)? as usize;
    let machine: Box<dyn opait_core::PrefixMachine> = match opts.get("machine") {
        None => Box::new(Vm),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| fail(2, format!("cannot read machine table {path}: {e}")))?;
            let name = Path::new(path)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("table")
                .to_string();
            Box::new(
                TableMachine::parse(name, &text)
                    .map_err(|e| fail(2, format!("bad machine table: {e}")))?,
            )
        }
    };
    Ok(Arc::new(Enumerator::new(machine).with_jobs(jobs)))
}

fn load_state(opts: &Options) -> Result<StateVector, Failure> {
    let spec = opts.require("state")?;
    if let Some(k) = spec.strip_prefix('e') {
        if let Ok(k) = k.parse::<usize>() {
            if k >= 1 {
                return Ok(StateVector::basis(k));
            }
        }
    }
    let text =
        fs::read_to_string(spec).map_err(|e| fail(2, format!("cannot read state {spec}: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| fail(2, format!("state file is not JSON: {e}")))?;
    state_from_json(&value).map_err(|e| fail(2, e.to_string()))
}

fn load_or_build_dovetail(opts: &Options, stages: u64) -> Result<DovetailState, Failure> {
    let mut state = match opts.checkpoint_path() {
        Some(path) if path.exists() => {
            let text = fs::read_to_string(&path)
                .map_err(|e| fail(2, format!("cannot read checkpoint: {e}")))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| fail(2, format!("checkpoint is not JSON: {e}")))?;
            DovetailState::from_json(&value).map_err(|e| fail(2, e.to_string()))?
        }
        _ => DovetailState::new(),
    };
    state.advance_to(stages);
    Ok(state)
}

fn stream_by_name(
    name: &str,
    dt: &Arc<Mutex<DovetailState>>,
    depth: u64,
) -> Result<SemiPovmStream, Failure> {
    match name {
        "projective" => Ok(projective_stream()),
        "universal" => Ok(universal_stream(dt.clone())),
        "scalar-embed" => {
            let geometric = SemiMeasureStream::from_fn("geometric", |_n, s| pow2(-(s as i64)));
            Ok(scalar_embed(&geometric))
        }
        "shift-projective" => Ok(opait_core::dovetail::shift_mix(&projective_stream())),
        _ => {
            if let Some(l) = name.strip_prefix("guarded:") {
                let l: u64 = l
                    .parse()
                    .ok()
                    .filter(|v| *v >= 1)
                    .ok_or_else(|| fail(2, "guarded:<l> needs a positive index"))?;
                return Ok(guarded_stream(dt.clone(), l));
            }
            if let Some(psi) = name.strip_prefix("psi:") {
                let psi = match psi {
                    "identity" => PsiMap::Identity,
                    "swap" => PsiMap::SwapPairs,
                    "empty" => PsiMap::Empty,
                    other => return Err(fail(2, format!("unknown map {other:?}"))),
                };
                let base = universal_stream(dt.clone());
                let (stream, _) = psi_transport(psi, &base, depth, depth);
                return Ok(stream);
            }
            Err(fail(2, format!("unknown stream {name:?}")))
        }
    }
}

fn cmd_machine_enum(opts: &Options) -> CliResult {
    let stages = opts.require_u64("stages")?;
    let enumerator = build_enumerator(opts)?;
    let snapshot = enumerator.enumerate_halting(stages);
    let mut out = String::from("program,length,output,weight\n");
    for (program, output) in &snapshot.discovered {
        out.push_str(&format!(
            "{program},{},{output},{}\n",
            program.len(),
            ratio_to_string(&pow2(-(program.len() as i64)))
        ));
    }
    out.push_str(&format!(
        "# stage {} total {}\n",
        snapshot.stage,
        ratio_to_string(&snapshot.kraft_sum)
    ));
    if opts.switch("selfcheck") {
        let programs: Vec<&Word> = snapshot.discovered.keys().collect();
        for (i, a) in programs.iter().enumerate() {
            for b in &programs[i + 1..] {
                if a.is_prefix_of(b) || b.is_prefix_of(a) {
                    return Err(fail(
                        1,
                        format!("selfcheck: {a} and {b} are prefix-related"),
                    ));
                }
            }
        }
        if snapshot.kraft_sum > BigRational::one() {
            return Err(fail(1, "selfcheck: discovered mass exceeds 1"));
        }
    }
    emit(opts, &out)
}

fn cmd_omega_approx(opts: &Options) -> CliResult {
    let stages = opts.require_u64("stages")?;
    let enumerator = build_enumerator(opts)?;
    let mut out = String::from("n,omega\n");
    let mut values = Vec::new();
    for n in 1..=stages {
        let v = enumerator.omega_lower(n);
        out.push_str(&format!("{n},{}\n", ratio_to_string(&v)));
        values.push(v);
    }
    if opts.switch("selfcheck") {
        for pair in values.windows(2) {
            if pair[1] < pair[0] {
                return Err(fail(1, "selfcheck: mass bound decreased"));
            }
        }
        if values.last().map(|v| *v >= BigRational::one()) == Some(true) {
            return Err(fail(1, "selfcheck: mass bound reached 1"));
        }
    }
    emit(opts, &out)
}

fn cmd_upovm_build(opts: &Options) -> CliResult {
    let stages = opts.require_u64("stages")?;
    let path = opts
        .checkpoint_path()
        .ok_or_else(|| fail(2, "missing required flag --checkpoint"))?;
    let mut state = if opts.switch("resume") {
        if !path.exists() {
            return Err(fail(
                2,
                format!("cannot resume: {} does not exist", path.display()),
            ));
        }
        let text = fs::read_to_string(&path)
            .map_err(|e| fail(2, format!("cannot read checkpoint: {e}")))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| fail(2, format!("checkpoint is not JSON: {e}")))?;
        DovetailState::from_json(&value).map_err(|e| fail(2, e.to_string()))?
    } else {
        DovetailState::new()
    };
    state.advance_to(stages);
    if opts.switch("selfcheck") && !state.replay_all() {
        return Err(fail(1, "selfcheck: acceptance log replay failed"));
    }
    let text = format!("{}\n", serde_json::to_string(&state.to_json()).unwrap());
    fs::write(&path, text).map_err(|e| fail(2, format!("cannot write checkpoint: {e}")))?;
    println!(
        "checkpoint at stage {} with {} emitters -> {}",
        state.stage(),
        state.emitter_count(),
        path.display()
    );
    Ok(())
}

fn cmd_upovm_omegahat(opts: &Options) -> CliResult {
    let stages = opts.require_u64("stages")?;
    let window = opts.u64_or("window", stages)?;
    let x = load_state(opts)?;
    let mut state = load_or_build_dovetail(opts, stages)?;
    let mut out = String::from("n,window,value\n");
    let mut values = Vec::new();
    for n in 1..=stages {
        let q = state.omega_hat_lower(n, window).quad_form(&x);
        out.push_str(&format!("{n},{window},{}\n", ratio_to_string(&q)));
        values.push(q);
    }
    if opts.switch("selfcheck") {
        for pair in values.windows(2) {
            if pair[1] < pair[0] {
                return Err(fail(1, "selfcheck: quadratic form decreased"));
            }
        }
        if values
            .iter()
            .any(|v| *v > BigRational::one() || v.is_negative())
        {
            return Err(fail(1, "selfcheck: quadratic form out of range"));
        }
    }
    emit(opts, &out)
}

fn cmd_upovm_validate(opts: &Options) -> CliResult {
    let depth = opts.u64_or("depth", 8)?;
    let name = opts.require("stream")?;
    let dt = Arc::new(Mutex::new(DovetailState::new()));
    let stream = stream_by_name(name, &dt, depth)?;
    let report = validate_semipovm(&stream, depth);
    let artifact = format!("{}\n", serde_json::to_string(&report.to_json()).unwrap());
    emit(opts, &artifact)?;
    if report.is_clean() {
        Ok(())
    } else {
        Err(fail(
            1,
            format!("{} violations at depth {depth}", report.violations.len()),
        ))
    }
}

fn cmd_measure_sample(opts: &Options) -> CliResult {
    let stage = opts.require_u64("stage")?;
    let window = opts.u64_or("window", stage)?;
    let seed = opts.u64_or("seed", 1)?;
    let draws = opts.u64_or("draws", 10_000)?;
    let x = load_state(opts)?;
    let name = opts.require("stream")?;
    let dt = Arc::new(Mutex::new(DovetailState::new()));
    let stream = stream_by_name(name, &dt, stage)?;
    let dist = measurement_distribution(&stream, stage, &x, window);
    if !dist.is_proper() {
        return Err(fail(1, "distribution has negative mass; stream invalid"));
    }
    let batch = sample_batch(&dist, seed, draws);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for outcome in &batch {
        let key = match outcome {
            MeasurementOutcome::String(w) => w.to_string(),
            MeasurementOutcome::Residual => "(residual)".to_string(),
        };
        *counts.entry(key).or_default() += 1;
    }
    let mut payload = dist.to_json(&x);
    payload.as_object_mut().unwrap().insert(
        "empirical".into(),
        json!({ "seed": seed, "draws": draws, "counts": counts }),
    );
    if opts.switch("selfcheck") {
        use num_traits::ToPrimitive;
        for (s, p) in &dist.outcomes {
            let key = Word::from_index(*s).to_string();
            let observed = payload["empirical"]["counts"]
                .get(&key)
                .and_then(Value::as_u64)
                .unwrap_or(0) as f64;
            let pf = p.to_f64().unwrap_or(0.0);
            let sigma = (draws as f64 * pf * (1.0 - pf)).sqrt();
            if (observed - draws as f64 * pf).abs() > 5.0 * sigma + 1.0 {
                return Err(fail(1, format!("selfcheck: frequency of {key} implausible")));
            }
        }
    }
    emit(
        opts,
        &format!("{}\n", serde_json::to_string(&payload).unwrap()),
    )
}

fn cmd_hhat_report(opts: &Options) -> CliResult {
    let stages = opts.require_u64("stages")?;
    let eps_bits = opts.u64_or("eps-bits", 10)?;
    let eps = pow2(-(eps_bits as i64));
    let s_word =
        Word::parse(opts.require("s")?).ok_or_else(|| fail(2, "--s must be a bit string"))?;
    let mut state = load_or_build_dovetail(opts, stages)?;
    if opts.switch("sweep") {
        // CSV sweep across stages: interval endpoints of the scalar part
        // and of the first diagonal entry
        let mut out = String::from("s,n,tail_lo,tail_hi,diag_lo,diag_hi\n");
        for n in 1..=stages {
            match hhat_upper(&mut state, s_word.index(), n, &eps) {
                Err(_) => continue,
                Ok(bound) => {
                    let tail = bound.enclosure.tail().clone();
                    let diag = bound.enclosure.diag_entries();
                    let first = diag.first().cloned().unwrap_or_else(|| tail.clone());
                    out.push_str(&format!(
                        "{},{n},{},{},{},{}\n",
                        s_word.index(),
                        ratio_to_string(&tail.lo),
                        ratio_to_string(&tail.hi),
                        ratio_to_string(&first.lo),
                        ratio_to_string(&first.hi),
                    ));
                }
            }
        }
        return emit(opts, &out);
    }
    let bound = hhat_upper(&mut state, s_word.index(), stages, &eps)
        .map_err(|e| fail(2, e.to_string()))?;
    let certificate = floor_certificate(s_word.index());
    let mut payload = json!({
        "bound": bound.to_json(),
        "floor_certificate": {
            "s": certificate.s,
            "floor": ratio_to_json(&certificate.floor),
            "mixture_weight": ratio_to_json(&certificate.mixture_weight),
            "component_limit": ratio_to_json(&certificate.component_limit),
        },
    });
    if opts.get("state").is_some() {
        let x = load_state(opts)?;
        let through = bound.enclosure.quad_form_interval(&x);
        payload.as_object_mut().unwrap().insert(
            "quad_form".into(),
            json!({ "lo": ratio_to_json(&through.lo), "hi": ratio_to_json(&through.hi) }),
        );
    }
    if let Some(pair) = opts.get("pair") {
        let t_word = Word::parse(pair).ok_or_else(|| fail(2, "--pair must be a bit string"))?;
        // recorded constant: observed scalar distance between the paired
        // bound and the plain bound (comparisons are made with this value,
        // never with a bare unquantified constant)
        let paired = hhat_upper(
            &mut state,
            opait_core::hhat::pair_words(&s_word, &t_word).index(),
            stages,
            &eps,
        )
        .map_err(|e| fail(2, e.to_string()))?;
        let transport_constant = paired
            .enclosure
            .tail()
            .max_distance(bound.enclosure.tail());
        payload.as_object_mut().unwrap().insert(
            "transport_constant".into(),
            ratio_to_json(&transport_constant),
        );
        let mut derived = Vec::new();
        for kind in [
            DerivedKind::Joint,
            DerivedKind::Conditional,
            DerivedKind::Mutual,
        ] {
            let d = hhat_derived(&mut state, kind, &s_word, &t_word, stages, &eps)
                .map_err(|e| fail(2, e.to_string()))?;
            let tail = d.enclosure.tail().clone();
            derived.push(json!({
                "kind": format!("{:?}", d.kind).to_lowercase(),
                "certified_upper_bound": d.certified_upper,
                "label": if d.certified_upper { "certified" } else {
                    "indicative enclosure only; differences of upper bounds are not one-sided"
                },
                "tail": { "lo": ratio_to_json(&tail.lo), "hi": ratio_to_json(&tail.hi) },
            }));
        }
        payload
            .as_object_mut()
            .unwrap()
            .insert("derived".into(), json!(derived));
    }
    emit(
        opts,
        &format!("{}\n", serde_json::to_string(&payload).unwrap()),
    )
}

fn cmd_convert_sm2seq(opts: &Options) -> CliResult {
    let stages = opts.require_u64("stages")?;
    let enumerator = build_enumerator(opts)?;
    let stream = match opts.require("stream")? {
        "pv" => SemiMeasureStream::from_pv(enumerator),
        "complexity" => SemiMeasureStream::from_complexity(enumerator),
        other => return Err(fail(2, format!("unknown stream {other:?} (pv|complexity)"))),
    };
    if opts.switch("selfcheck") && !validate_semimeasure(&stream, stages.min(16)).is_clean() {
        return Err(fail(1, "selfcheck: stream invariants violated"));
    }
    let seq = to_increasing_sequence(&stream);
    let mut out = String::from("n,a_n\n");
    for n in 1..=stages {
        out.push_str(&format!("{n},{}\n", ratio_to_string(&seq.eval(n))));
    }
    emit(opts, &out)
}

fn cmd_convert_seq2sm(opts: &Options) -> CliResult {
    let stages = opts.require_u64("stages")?;
    let divisor = opts.u64_or("divisor", 1)?;
    let enumerator = build_enumerator(opts)?;
    let seq = IncreasingSequence::from_omega(enumerator);
    let stream =
        from_increasing_sequence(&seq, divisor, stages).map_err(|e| fail(2, e.to_string()))?;
    if opts.switch("selfcheck") && !validate_semimeasure(&stream, stages.min(16)).is_clean() {
        return Err(fail(1, "selfcheck: converted stream invalid"));
    }
    emit(opts, &stream.export_csv(stages))
}

fn cmd_psi_transport(opts: &Options) -> CliResult {
    let stages = opts.require_u64("stages")?;
    let window = opts.u64_or("window", stages)?;
    let psi = match opts.require("psi")? {
        "identity" => PsiMap::Identity,
        "swap" => PsiMap::SwapPairs,
        "empty" => PsiMap::Empty,
        other => return Err(fail(2, format!("unknown map {other:?}"))),
    };
    let dt = Arc::new(Mutex::new(DovetailState::new()));
    let base = universal_stream(dt);
    let (stream, report) = psi_transport(psi, &base, stages, window);
    let validation = validate_semipovm(&stream, stages);
    let payload = json!({
        "transport": report.to_json(),
        "validation": validation.to_json(),
        "all_witnesses_hold": report.all_hold(),
    });
    emit(
        opts,
        &format!("{}\n", serde_json::to_string(&payload).unwrap()),
    )?;
    if validation.is_clean() && report.all_hold() {
        Ok(())
    } else {
        Err(fail(1, "transport validation failed"))
    }
}
