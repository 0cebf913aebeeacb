//! Scenario files: `key = value` lines grouped under `[section]` headers.
//!
//! Parsing is strict. Unknown sections, unknown keys, keys that the chosen
//! mode does not use, duplicates and malformed values are all reported
//! together, one problem per line, so a typo can never silently fall back to
//! a default.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use haptic_core::control::TimeProfile;
use haptic_core::landscape::{ForceLandscape, SyntheticLandscapeParams};
use haptic_core::{ControllerMode, Intent, PredictorConfig, Scenario, TriggerMode};
use thiserror::Error;

pub const SECTIONS: [&str; 7] = [
    "landscape",
    "sensor",
    "actuator",
    "finger",
    "controller",
    "predictor",
    "run",
];

/// Reference for every key, shown by `simulate --help`.
pub const SCENARIO_HELP: &str = "\
SCENARIO FILE
  Plain text, `key = value` per line, `#` starts a comment. Sections:

  [landscape]   file = PATH            grid CSV (relative to the scenario file);
                                       when absent a synthetic grid is generated:
                a = 100  b = 5000  d0 = 5  noise_n = 0  seed = 0
                d_min_mm = 0  d_max_mm = 35  d_step_mm = 0.5
                i_min_a = -2  i_max_a = 2  i_step_a = 0.05
  [sensor]      s_max = 1  falloff_mm = 10  range_mm = 35  resolution_mm = 0.2
                rate_hz = 4800  latency_ms = 1.8  noise_sigma = 0
  [actuator]    settle_ms = 1.0 (99 % settle)  output_rate_hz = 96000
                extra_latency_ms = 1.6  i_min_a, i_max_a = landscape current span
  [finger]      mass_kg = 0.03  stiffness_n_mm = 0.5  damping_ns_mm = 0.01
                gravity_m_s2 = 9.81  gravity_compensation = true
                contact_stiffness_n_mm = 10  contact_damping_ns_mm = 0.05
                initial_mm, initial_velocity_mm_s = intent at t = 0
                intent = hold | tap | sweep | sinusoid | none   (default hold)
                  hold:      hold_mm = 20
                  tap:       start_mm = 20  end_mm = -5  speed_mm_s = 500
                  sweep:     start_mm = 0   end_mm = 35  speed_mm_s = 50
                  sinusoid:  center_mm = 15  amplitude_mm = 10  freq_hz = 2
  [controller]  mode = passive_surface | force_track | vibro | open_loop
                  force_track: force_n = \"const 0\"
                  open_loop:   current_a = \"const 0\"
                  vibro:       f_dc_n = 0  amplitude_n = 0.1  freq_hz = 100
                  profiles: \"const V\", \"step BEFORE AFTER AT_MS\", \"sine OFFSET AMP HZ\"
                trigger_v_min_mm_s = 50  trigger_v_ref_mm_s = 1050  trigger_gamma = 1
  [predictor]   present → enabled = true; absent → no touch events
                mode = predictive | reactive  threshold_mm = 0
                input_latency_ms = sensor latency
                tactile_latency_ms = actuator settle + extra latency
                audio_latency_ms = 5  v_min_mm_s = 50  ema_alpha = 0.2
                velocity_window = 48  position_window = 24  rearm_mm = 2
                compensate_input_latency = true
  [run]         required. duration_s = 0.1 (< 10)  seed = 0  decimation = 1
";

#[derive(Debug, Error, PartialEq)]
#[error("{path}:\n  {}", .problems.join("\n  "))]
pub struct ConfigError {
    pub path: String,
    pub problems: Vec<String>,
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn parse_sections(text: &str, problems: &mut Vec<String>) -> Sections {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                problems.push(format!(
                    "line {line}: unknown section [{name}] (expected one of {})",
                    SECTIONS.map(|s| format!("[{s}]")).join(" ")
                ));
                current = None;
            } else if sections.contains_key(name) {
                problems.push(format!("line {line}: section [{name}] appears twice"));
                current = Some(name.to_string());
            } else {
                sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            problems.push(format!("line {line}: expected `key = value`, got `{content}`"));
            continue;
        };
        let key = key.trim();
        let value = value.trim().trim_matches('"').to_string();
        let Some(section) = &current else {
            problems.push(format!("line {line}: key `{key}` outside any known section"));
            continue;
        };
        let keys = sections.get_mut(section).expect("section registered");
        if let Some(prev) = keys.get(key) {
            problems.push(format!(
                "line {line}: [{section}] {key} already set on line {}",
                prev.line
            ));
        } else {
            keys.insert(key.to_string(), Entry { line, value });
        }
    }
    sections
}

/// Typed access to one section; every key read is consumed so leftovers can
/// be reported as unknown.
struct Section<'a> {
    name: &'static str,
    keys: BTreeMap<String, Entry>,
    problems: &'a mut Vec<String>,
}

impl<'a> Section<'a> {
    fn new(name: &'static str, sections: &mut Sections, problems: &'a mut Vec<String>) -> Self {
        Self {
            name,
            keys: sections.remove(name).unwrap_or_default(),
            problems,
        }
    }

    fn raw(&mut self, key: &str) -> Option<Entry> {
        self.keys.remove(key)
    }

    fn parsed<T>(&mut self, key: &str, kind: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let entry = self.raw(key)?;
        match parse(&entry.value) {
            Some(v) => Some(v),
            None => {
                self.problems.push(format!(
                    "line {}: [{}] {key}: expected {kind}, got `{}`",
                    entry.line, self.name, entry.value
                ));
                None
            }
        }
    }

    fn opt_f64(&mut self, key: &str) -> Option<f64> {
        self.parsed(key, "a finite number", |s| {
            s.parse::<f64>().ok().filter(|v| v.is_finite())
        })
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        self.opt_f64(key).unwrap_or(default)
    }

    fn u64(&mut self, key: &str, default: u64) -> u64 {
        self.parsed(key, "a non-negative integer", |s| s.parse::<u64>().ok())
            .unwrap_or(default)
    }

    fn usize(&mut self, key: &str, default: usize) -> usize {
        self.parsed(key, "a non-negative integer", |s| s.parse::<usize>().ok())
            .unwrap_or(default)
    }

    fn bool(&mut self, key: &str, default: bool) -> bool {
        self.parsed(key, "true or false", |s| match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        })
        .unwrap_or(default)
    }

    fn choice(&mut self, key: &str, options: &[&'static str], default: &'static str) -> &'static str {
        let kind = format!("one of {}", options.join(" | "));
        self.parsed(key, &kind, |s| options.iter().copied().find(|o| *o == s))
            .unwrap_or(default)
    }

    fn profile(&mut self, key: &str) -> TimeProfile {
        self.parsed(key, "a profile (`const V`, `step B A AT_MS`, `sine O A HZ`)", |s| {
            s.parse::<TimeProfile>().ok()
        })
        .unwrap_or(TimeProfile::Constant(0.0))
    }

    fn contains(&self, key: &str) -> bool {
        self.keys.contains_key(key)
    }

    /// Reports every key nobody asked for. `context` explains why keys that
    /// exist elsewhere were not used here.
    fn finish(self, context: &str) {
        for (key, entry) in self.keys {
            self.problems.push(format!(
                "line {}: [{}] unknown key `{key}`{context}",
                entry.line, self.name
            ));
        }
    }
}

/// Parses a scenario file; relative paths inside it resolve against its
/// directory.
pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.display().to_string(),
        problems: vec![format!("cannot read: {e}")],
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    scenario_from_str(&text, base).map_err(|problems| ConfigError {
        path: path.display().to_string(),
        problems,
    })
}

/// Builds a validated scenario, or returns every problem found.
pub fn scenario_from_str(text: &str, base_dir: &Path) -> Result<Scenario, Vec<String>> {
    let mut problems = Vec::new();
    let mut sections = parse_sections(text, &mut problems);
    if !sections.contains_key("run") {
        problems.push("missing required [run] section".to_string());
    }

    let landscape = build_landscape(&mut sections, base_dir, &mut problems);
    let Some(landscape) = landscape else {
        // nothing else can be checked against a missing grid; still report keys
        return Err(problems);
    };
    let mut sc = Scenario::new(landscape);

    {
        let mut s = Section::new("sensor", &mut sections, &mut problems);
        let m = &mut sc.sensor;
        m.s_max = s.f64("s_max", m.s_max);
        m.falloff_mm = s.f64("falloff_mm", m.falloff_mm);
        m.range_mm = s.f64("range_mm", m.range_mm);
        m.resolution_mm = s.f64("resolution_mm", m.resolution_mm);
        m.rate_hz = s.f64("rate_hz", m.rate_hz);
        m.latency_s = s.f64("latency_ms", m.latency_s * 1e3) * 1e-3;
        m.noise_sigma = s.f64("noise_sigma", m.noise_sigma);
        s.finish("");
    }

    {
        let mut s = Section::new("actuator", &mut sections, &mut problems);
        let a = &mut sc.actuator;
        let settle_ms = s.f64("settle_ms", a.settle_time_99() * 1e3);
        a.tau_s = settle_ms * 1e-3 / haptic_core::actuator::LN_100;
        a.output_rate_hz = s.f64("output_rate_hz", a.output_rate_hz);
        a.output_latency_extra_s = s.f64("extra_latency_ms", a.output_latency_extra_s * 1e3) * 1e-3;
        a.i_min = s.f64("i_min_a", a.i_min);
        a.i_max = s.f64("i_max_a", a.i_max);
        s.finish("");
    }

    {
        let mut s = Section::new("finger", &mut sections, &mut problems);
        let f = &mut sc.finger;
        f.mass_kg = s.f64("mass_kg", f.mass_kg);
        f.stiffness_n_mm = s.f64("stiffness_n_mm", f.stiffness_n_mm);
        f.damping_ns_mm = s.f64("damping_ns_mm", f.damping_ns_mm);
        f.gravity_m_s2 = s.f64("gravity_m_s2", f.gravity_m_s2);
        f.gravity_compensation = s.bool("gravity_compensation", f.gravity_compensation);
        f.initial_mm = s.opt_f64("initial_mm");
        f.initial_velocity_mm_s = s.opt_f64("initial_velocity_mm_s");
        sc.contact.stiffness_n_mm = s.f64("contact_stiffness_n_mm", sc.contact.stiffness_n_mm);
        sc.contact.damping_ns_mm = s.f64("contact_damping_ns_mm", sc.contact.damping_ns_mm);
        let kind = s.choice("intent", &["hold", "tap", "sweep", "sinusoid", "none"], "hold");
        f.intent = match kind {
            "hold" => Intent::Hold {
                at_mm: s.f64("hold_mm", 20.0),
            },
            "tap" | "sweep" => {
                let (start, end, speed) = if kind == "tap" {
                    (20.0, -5.0, 500.0)
                } else {
                    (0.0, 35.0, 50.0)
                };
                let start_mm = s.f64("start_mm", start);
                let end_mm = s.f64("end_mm", end);
                let speed = s.f64("speed_mm_s", speed);
                if !(speed > 0.0) {
                    s.problems
                        .push(format!("[finger] speed_mm_s must be > 0, got {speed}"));
                }
                Intent::Ramp {
                    start_mm,
                    velocity_mm_s: if end_mm < start_mm { -speed } else { speed },
                    end_mm,
                }
            }
            "sinusoid" => Intent::Sinusoid {
                center_mm: s.f64("center_mm", 15.0),
                amplitude_mm: s.f64("amplitude_mm", 10.0),
                freq_hz: s.f64("freq_hz", 2.0),
            },
            _ => Intent::None,
        };
        s.finish(&format!(" (or not used by intent = {kind})"));
    }

    {
        let mut s = Section::new("controller", &mut sections, &mut problems);
        let mode = s.choice(
            "mode",
            &["passive_surface", "force_track", "vibro", "open_loop"],
            "passive_surface",
        );
        sc.controller = match mode {
            "force_track" => ControllerMode::ForceTrack(s.profile("force_n")),
            "open_loop" => ControllerMode::OpenLoop(s.profile("current_a")),
            "vibro" => ControllerMode::Vibro {
                f_dc: s.f64("f_dc_n", 0.0),
                amplitude: s.f64("amplitude_n", 0.1),
                freq_hz: s.f64("freq_hz", 100.0),
            },
            _ => ControllerMode::PassiveSurface,
        };
        let t = &mut sc.trigger;
        t.v_min = s.f64("trigger_v_min_mm_s", t.v_min);
        t.v_ref = s.f64("trigger_v_ref_mm_s", t.v_ref);
        t.gamma = s.f64("trigger_gamma", t.gamma);
        s.finish(&format!(" (or not used by mode = {mode})"));
    }

    {
        let present = sections.contains_key("predictor");
        let mut s = Section::new("predictor", &mut sections, &mut problems);
        let enabled = s.bool("enabled", present);
        let d = PredictorConfig::default();
        let mode = match s.choice("mode", &["predictive", "reactive"], "predictive") {
            "reactive" => TriggerMode::Reactive,
            _ => TriggerMode::Predictive,
        };
        let cfg = PredictorConfig {
            mode,
            d_threshold_mm: s.f64("threshold_mm", d.d_threshold_mm),
            input_latency_s: s.f64("input_latency_ms", sc.sensor.latency_s * 1e3) * 1e-3,
            tactile_latency_s: s.f64("tactile_latency_ms", sc.actuator.output_latency() * 1e3) * 1e-3,
            audio_latency_s: s.f64("audio_latency_ms", d.audio_latency_s * 1e3) * 1e-3,
            v_min_mm_s: s.f64("v_min_mm_s", d.v_min_mm_s),
            ema_alpha: s.f64("ema_alpha", d.ema_alpha),
            velocity_window: s.usize("velocity_window", d.velocity_window),
            position_window: s.usize("position_window", d.position_window),
            rearm_distance_mm: s.f64("rearm_mm", d.rearm_distance_mm),
            compensate_input_latency: s.bool("compensate_input_latency", d.compensate_input_latency),
        };
        sc.predictor = enabled.then_some(cfg);
        s.finish("");
    }

    {
        let mut s = Section::new("run", &mut sections, &mut problems);
        sc.duration_s = s.f64("duration_s", sc.duration_s);
        sc.seed = s.u64("seed", sc.seed);
        sc.trace_decimation = s.u64("decimation", sc.trace_decimation);
        s.finish("");
    }

    problems.extend(sc.problems());
    if problems.is_empty() {
        Ok(sc)
    } else {
        Err(problems)
    }
}

const GENERATOR_KEYS: [&str; 11] = [
    "a", "b", "d0", "noise_n", "seed", "d_min_mm", "d_max_mm", "d_step_mm", "i_min_a", "i_max_a",
    "i_step_a",
];

fn build_landscape(
    sections: &mut Sections,
    base_dir: &Path,
    problems: &mut Vec<String>,
) -> Option<ForceLandscape> {
    let mut s = Section::new("landscape", sections, problems);
    if let Some(file) = s.raw("file") {
        let clashes: Vec<&str> = GENERATOR_KEYS.into_iter().filter(|k| s.contains(k)).collect();
        for k in clashes {
            let line = s.raw(k).map_or(0, |e| e.line);
            s.problems.push(format!(
                "line {line}: [landscape] {k} cannot be combined with file (line {})",
                file.line
            ));
        }
        s.finish("");
        let path = base_dir.join(&file.value);
        let loaded = fs::File::open(&path)
            .map_err(|e| e.to_string())
            .and_then(|f| {
                ForceLandscape::read_csv(std::io::BufReader::new(f)).map_err(|e| e.to_string())
            });
        return match loaded {
            Ok(grid) => Some(grid),
            Err(e) => {
                problems.push(format!(
                    "line {}: [landscape] file {}: {e}",
                    file.line,
                    path.display()
                ));
                None
            }
        };
    }

    let d = SyntheticLandscapeParams::default();
    let params = SyntheticLandscapeParams {
        a: s.f64("a", d.a),
        b: s.f64("b", d.b),
        d0: s.f64("d0", d.d0),
        noise_sigma: s.f64("noise_n", d.noise_sigma),
        seed: s.u64("seed", d.seed),
        d_min: s.f64("d_min_mm", d.d_min),
        d_max: s.f64("d_max_mm", d.d_max),
        d_step: s.f64("d_step_mm", d.d_step),
        i_min: s.f64("i_min_a", d.i_min),
        i_max: s.f64("i_max_a", d.i_max),
        i_step: s.f64("i_step_a", d.i_step),
    };
    s.finish("");
    match ForceLandscape::generate_synthetic(&params) {
        Ok(grid) => Some(grid),
        Err(e) => {
            problems.push(format!("[landscape] {e}"));
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, Vec<String>> {
        scenario_from_str(text, Path::new("."))
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let sc = parse("[run]\n").unwrap();
        assert_eq!(sc.duration_s, 0.1);
        assert_eq!(sc.controller, ControllerMode::PassiveSurface);
        assert!(sc.predictor.is_none());
        assert_eq!(sc.finger.intent, Intent::Hold { at_mm: 20.0 });
        assert_eq!(sc.landscape.distances().len(), 71);
    }

    #[test]
    fn empty_file_names_run_section() {
        let problems = parse("").unwrap_err();
        assert!(problems.iter().any(|p| p.contains("[run]")), "{problems:?}");
    }

    #[test]
    fn every_unknown_key_is_listed() {
        let text = "[finger]\nmass_kgg = 1\nintent = tap\nhold_mm = 3\n[run]\nduraton_s = 1\n";
        let problems = parse(text).unwrap_err();
        assert_eq!(problems.len(), 3, "{problems:?}");
        assert!(problems[0].contains("hold_mm") && problems[0].contains("intent = tap"));
        assert!(problems[1].contains("mass_kgg") && problems[1].starts_with("line 2"));
        assert!(problems[2].contains("duraton_s"));
    }

    #[test]
    fn bad_values_sections_and_duplicates() {
        let text = "stray = 1\n[sensr]\n[sensor]\nrate_hz = fast\nrate_hz = 10\n[run]\nseed = -1\n";
        let problems = parse(text).unwrap_err();
        let all = problems.join("\n");
        assert!(all.contains("outside any known section"));
        assert!(all.contains("unknown section [sensr]"));
        assert!(all.contains("expected a finite number, got `fast`"));
        assert!(all.contains("already set on line 4"));
        assert!(all.contains("non-negative integer"));
    }

    #[test]
    fn tap_and_predictor_sections() {
        let text = "\
# a tap
[finger]
intent = tap
speed_mm_s = 200   # slow
[controller]
mode = force_track
force_n = \"step 0 0.2 10\"
[predictor]
audio_latency_ms = 8
[run]
duration_s = 0.2
seed = 4
";
        let sc = parse(text).unwrap();
        assert_eq!(
            sc.finger.intent,
            Intent::Ramp { start_mm: 20.0, velocity_mm_s: -200.0, end_mm: -5.0 }
        );
        let p = sc.predictor.unwrap();
        assert!((p.audio_latency_s - 8e-3).abs() < 1e-15);
        assert!((p.tactile_latency_s - 2.6e-3).abs() < 1e-12);
        assert_eq!(sc.seed, 4);
        assert!(matches!(sc.controller, ControllerMode::ForceTrack(TimeProfile::Step { .. })));
    }

    #[test]
    fn predictor_can_be_disabled_explicitly() {
        let sc = parse("[predictor]\nenabled = false\n[run]\n").unwrap();
        assert!(sc.predictor.is_none());
    }

    #[test]
    fn semantic_problems_are_reported_too() {
        let problems = parse("[run]\nduration_s = 20\ndecimation = 0\n").unwrap_err();
        assert_eq!(problems.len(), 2, "{problems:?}");
    }

    #[test]
    fn file_and_generator_keys_conflict() {
        let problems = parse("[landscape]\nfile = g.csv\nb = 0\n[run]\n").unwrap_err();
        assert!(problems.iter().any(|p| p.contains("cannot be combined")));
    }
}
