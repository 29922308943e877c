use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Dynamical-decoupling family. The integer is the number of pi pulses for
/// CPMG and the number of repetitions of the XY block otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SequenceKind {
    Ramsey,
    SpinEcho,
    Cpmg(u32),
    Xy4(u32),
    Xy8(u32),
}

impl SequenceKind {
    pub fn pi_pulse_count(self) -> usize {
        match self {
            SequenceKind::Ramsey => 0,
            SequenceKind::SpinEcho => 1,
            SequenceKind::Cpmg(n) => n as usize,
            SequenceKind::Xy4(r) => 4 * r as usize,
            SequenceKind::Xy8(r) => 8 * r as usize,
        }
    }

    /// Axis phases (rad) of the pi pulses, x = 0 and y = pi/2.
    fn pi_phases(self) -> Vec<f64> {
        use std::f64::consts::FRAC_PI_2 as Y;
        const X: f64 = 0.0;
        match self {
            SequenceKind::Ramsey => vec![],
            SequenceKind::SpinEcho => vec![X],
            SequenceKind::Cpmg(n) => vec![Y; n as usize],
            SequenceKind::Xy4(r) => [X, Y, X, Y].repeat(r as usize),
            SequenceKind::Xy8(r) => [X, Y, X, Y, Y, X, Y, X].repeat(r as usize),
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            SequenceKind::Cpmg(0) | SequenceKind::Xy4(0) | SequenceKind::Xy8(0) => {
                Err(invalid("sequence kind", "pulse count must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    /// The smallest XY-4 repetition count whose matched frequency
    /// N / (2 tau) is reached with tau closest to `tau_target`.
    pub fn xy4_for_frequency(f_mhz: f64, tau_target: f64) -> (SequenceKind, f64) {
        let blocks = ((2.0 * f_mhz * tau_target) / 4.0).round().max(1.0) as u32;
        let n = 4.0 * blocks as f64;
        (SequenceKind::Xy4(blocks), n / (2.0 * f_mhz))
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceKind::Ramsey => write!(f, "ramsey"),
            SequenceKind::SpinEcho => write!(f, "spin-echo"),
            SequenceKind::Cpmg(n) => write!(f, "cpmg:{n}"),
            SequenceKind::Xy4(r) => write!(f, "xy4:{r}"),
            SequenceKind::Xy8(r) => write!(f, "xy8:{r}"),
        }
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, count) = match lower.split_once(':') {
            Some((n, c)) => {
                let c: u32 = c
                    .trim()
                    .parse()
                    .map_err(|_| invalid("sequence kind", format!("bad count in `{s}`")))?;
                (n.trim().to_string(), Some(c))
            }
            None => (lower.clone(), None),
        };
        let kind = match (name.as_str(), count) {
            ("ramsey", None) => SequenceKind::Ramsey,
            ("spin-echo" | "echo", None) => SequenceKind::SpinEcho,
            ("cpmg", Some(n)) => SequenceKind::Cpmg(n),
            ("xy4", Some(r)) => SequenceKind::Xy4(r),
            ("xy4", None) => SequenceKind::Xy4(1),
            ("xy8", Some(r)) => SequenceKind::Xy8(r),
            ("xy8", None) => SequenceKind::Xy8(1),
            _ => return Err(invalid("sequence kind", format!("unsupported sequence `{s}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl TryFrom<String> for SequenceKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SequenceKind> for String {
    fn from(k: SequenceKind) -> String {
        k.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Element {
    LaserInit { duration: f64 },
    MwPulse { axis_phase: f64, angle: f64, duration: f64 },
    FreeEvolve { duration: f64 },
    Readout { window: f64 },
}

/// Durations (us) of the non-sensing parts of a sequence. Zero pulse
/// duration selects ideal, instantaneous pulses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceTiming {
    pub laser_init: f64,
    pub pulse_duration: f64,
    pub readout: f64,
}

impl Default for SequenceTiming {
    fn default() -> Self {
        Self {
            laser_init: 2.0,
            pulse_duration: 0.0,
            readout: 0.2,
        }
    }
}

/// A timed pulse sequence. Times inside the sensing window are measured
/// from the center of the first pi/2 pulse; the window is [0, tau].
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence {
    pub kind: SequenceKind,
    pub tau: f64,
    pub final_phase: f64,
    pub elements: Vec<Element>,
    /// Centers of the pi pulses within [0, tau].
    pub toggles: Vec<f64>,
}

pub fn build_sequence(kind: SequenceKind, tau: f64, final_phase: f64) -> Result<PulseSequence> {
    build_sequence_with(kind, tau, final_phase, SequenceTiming::default())
}

pub fn build_sequence_with(
    kind: SequenceKind,
    tau: f64,
    final_phase: f64,
    timing: SequenceTiming,
) -> Result<PulseSequence> {
    kind.validate()?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid("tau", "must be positive"));
    }
    let n = kind.pi_pulse_count();
    let tp = timing.pulse_duration;
    if tp < 0.0 || (n > 0 && tp >= tau / n as f64) || (n == 0 && tp >= tau) {
        return Err(invalid("pulse_duration", "pulses must fit between each other"));
    }

    let spacing = if n > 0 { tau / n as f64 } else { tau };
    let toggles: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * spacing).collect();

    use std::f64::consts::{FRAC_PI_2, PI};
    let mut elements = vec![
        Element::LaserInit {
            duration: timing.laser_init,
        },
        Element::MwPulse {
            axis_phase: 0.0,
            angle: FRAC_PI_2,
            duration: tp / 2.0,
        },
    ];
    // Free evolution excludes the halves of the pulses that bound it.
    let mut last = 0.0;
    let mut last_half = tp / 4.0;
    for (&center, phase) in toggles.iter().zip(kind.pi_phases()) {
        elements.push(Element::FreeEvolve {
            duration: center - last - last_half - tp / 2.0,
        });
        elements.push(Element::MwPulse {
            axis_phase: phase,
            angle: PI,
            duration: tp,
        });
        last = center;
        last_half = tp / 2.0;
    }
    elements.push(Element::FreeEvolve {
        duration: tau - last - last_half - tp / 4.0,
    });
    elements.push(Element::MwPulse {
        axis_phase: final_phase,
        angle: FRAC_PI_2,
        duration: tp / 2.0,
    });
    elements.push(Element::Readout {
        window: timing.readout,
    });

    Ok(PulseSequence {
        kind,
        tau,
        final_phase,
        elements,
        toggles,
    })
}

impl PulseSequence {
    pub fn pi_pulse_count(&self) -> usize {
        self.toggles.len()
    }

    /// Signal frequency (MHz) the sequence is matched to, N / (2 tau).
    pub fn matched_frequency(&self) -> Option<f64> {
        let n = self.pi_pulse_count();
        (n > 0).then(|| n as f64 / (2.0 * self.tau))
    }

    /// Modulation s(t) for t in the sensing window.
    pub fn sign_at(&self, t: f64) -> f64 {
        let flips = self.toggles.iter().filter(|&&c| c <= t).count();
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Constant-sign pieces (start, end, sign) covering [0, tau].
    pub fn segments(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.toggles.len() + 1);
        let mut start = 0.0;
        let mut sign = 1.0;
        for &c in &self.toggles {
            out.push((start, c, sign));
            start = c;
            sign = -sign;
        }
        out.push((start, self.tau, sign));
        out
    }

    pub fn total_duration(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| match *e {
                Element::LaserInit { duration }
                | Element::MwPulse { duration, .. }
                | Element::FreeEvolve { duration } => duration,
                Element::Readout { window } => window,
            })
            .sum()
    }

    /// One element per line, e.g. `mw phase=1.5708 angle=3.1416 duration=0`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "sequence kind={} tau={} final_phase={}\n",
            self.kind, self.tau, self.final_phase
        );
        for e in &self.elements {
            let line = match *e {
                Element::LaserInit { duration } => format!("laser duration={duration}"),
                Element::MwPulse {
                    axis_phase,
                    angle,
                    duration,
                } => format!("mw phase={axis_phase} angle={angle} duration={duration}"),
                Element::FreeEvolve { duration } => format!("free duration={duration}"),
                Element::Readout { window } => format!("readout window={window}"),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Parses the header line of [`to_text`](Self::to_text) and rebuilds
    /// the sequence with the given timing.
    pub fn from_text(text: &str, timing: SequenceTiming) -> Result<PulseSequence> {
        let header = text
            .lines()
            .find(|l| l.trim_start().starts_with("sequence"))
            .ok_or_else(|| invalid("sequence text", "missing `sequence` header"))?;
        let mut kind = None;
        let mut tau = None;
        let mut final_phase = 0.0;
        for token in header.split_whitespace().skip(1) {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| invalid("sequence text", format!("bad token `{token}`")))?;
            let num = || {
                v.parse::<f64>()
                    .map_err(|_| invalid("sequence text", format!("bad number `{v}`")))
            };
            match k {
                "kind" => kind = Some(v.parse::<SequenceKind>()?),
                "tau" => tau = Some(num()?),
                "final_phase" => final_phase = num()?,
                other => return Err(invalid("sequence text", format!("unknown key `{other}`"))),
            }
        }
        let kind = kind.ok_or_else(|| invalid("sequence text", "missing kind"))?;
        let tau = tau.ok_or_else(|| invalid("sequence text", "missing tau"))?;
        build_sequence_with(kind, tau, final_phase, timing)
    }
}
