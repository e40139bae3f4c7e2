//! Debounced warnings from per-register classifications.
//!
//! A warning fires when the classifier has reported a trigger style for
//! `consecutive_threshold` registers in a row, that run has not warned yet,
//! and at least `cooldown_s` seconds have passed since the previous warning.
//! A run held back by the cooldown warns as soon as the cooldown expires.

use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

use crate::ann::{AnnError, Network};
use crate::ingest::{LogError, LogReader};
use crate::record::{Dataset, DrivingStyle, Register};

#[derive(Debug, Error)]
pub enum AlertError {
    #[error("register at {time} s is not after the previous one at {previous} s")]
    OutOfOrderRegister { time: f64, previous: f64 },
    #[error("invalid alert policy: {0}")]
    InvalidPolicy(&'static str),
    #[error(transparent)]
    Ann(#[from] AnnError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlertPolicy {
    pub trigger_styles: Vec<DrivingStyle>,
    /// Consecutive trigger-style registers required, at least 1.
    pub consecutive_threshold: usize,
    /// Minimum seconds between warnings.
    pub cooldown_s: f64,
}

impl Default for AlertPolicy {
    fn default() -> Self {
        Self { trigger_styles: vec![DrivingStyle::Agg], consecutive_threshold: 3, cooldown_s: 30.0 }
    }
}

impl AlertPolicy {
    pub fn validate(&self) -> Result<(), AlertError> {
        if self.consecutive_threshold == 0 {
            return Err(AlertError::InvalidPolicy("consecutive threshold must be at least 1"));
        }
        if !(self.cooldown_s >= 0.0) || !self.cooldown_s.is_finite() {
            return Err(AlertError::InvalidPolicy("cooldown must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlertEvent {
    pub time_of_day: f64,
    pub latitude: f64,
    pub longitude: f64,
    pub style: DrivingStyle,
    pub message: String,
}

impl fmt::Display for AlertEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ALERT {} {} {:.6} {:.6} {}",
            self.time_of_day,
            self.style.tag(),
            self.latitude,
            self.longitude,
            self.message
        )
    }
}

pub fn warning_message(style: DrivingStyle) -> String {
    format!("Warning: {} driving detected", style.description())
}

/// Per-stream state machine.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertState {
    policy: AlertPolicy,
    run_style: Option<DrivingStyle>,
    run_len: usize,
    run_alerted: bool,
    last_time: Option<f64>,
    last_event: Option<f64>,
}

impl AlertState {
    pub fn new(policy: AlertPolicy) -> Result<Self, AlertError> {
        policy.validate()?;
        Ok(Self { policy, run_style: None, run_len: 0, run_alerted: false, last_time: None, last_event: None })
    }

    pub fn policy(&self) -> &AlertPolicy {
        &self.policy
    }

    /// Length of the current run of identical predictions.
    pub fn run_length(&self) -> usize {
        self.run_len
    }

    /// Feed one register with its prediction.
    pub fn observe(&mut self, r: &Register, predicted: DrivingStyle) -> Result<Option<AlertEvent>, AlertError> {
        if let Some(previous) = self.last_time {
            if !(r.time_of_day > previous) {
                return Err(AlertError::OutOfOrderRegister { time: r.time_of_day, previous });
            }
        }
        self.last_time = Some(r.time_of_day);
        if self.run_style == Some(predicted) {
            self.run_len += 1;
        } else {
            self.run_style = Some(predicted);
            self.run_len = 1;
            self.run_alerted = false;
        }
        let cooled = self.last_event.is_none_or(|t| r.time_of_day - t >= self.policy.cooldown_s);
        if self.policy.trigger_styles.contains(&predicted)
            && self.run_len >= self.policy.consecutive_threshold
            && !self.run_alerted
            && cooled
        {
            self.run_alerted = true;
            self.last_event = Some(r.time_of_day);
            return Ok(Some(AlertEvent {
                time_of_day: r.time_of_day,
                latitude: r.latitude,
                longitude: r.longitude,
                style: predicted,
                message: warning_message(predicted),
            }));
        }
        Ok(None)
    }

    /// Classify `r` with `net` and feed the prediction.
    pub fn step(&mut self, net: &Network, r: &Register) -> Result<(Option<AlertEvent>, DrivingStyle), AlertError> {
        let predicted = net.predict(r)?;
        Ok((self.observe(r, predicted)?, predicted))
    }
}

/// Value-style form of [`AlertState::step`].
pub fn step(
    mut state: AlertState,
    net: &Network,
    r: &Register,
) -> Result<(AlertState, Option<AlertEvent>, DrivingStyle), AlertError> {
    let (event, style) = state.step(net, r)?;
    Ok((state, event, style))
}

/// All events for a complete log.
pub fn replay(log: &Dataset, net: &Network, policy: &AlertPolicy) -> Result<Vec<AlertEvent>, AlertError> {
    let mut state = AlertState::new(policy.clone())?;
    let mut events = Vec::new();
    for r in &log.registers {
        if let (Some(e), _) = state.step(net, r)? {
            events.push(e);
        }
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StreamSummary {
    pub registers: usize,
    pub events: Vec<AlertEvent>,
}

/// Read register CSV rows from `input` and write `time,STYLE` per register,
/// plus an `ALERT ...` line after each register that fires a warning.
/// Output is flushed per register.
pub fn stream<R: Read, W: Write>(
    input: R,
    mut output: W,
    net: &Network,
    policy: &AlertPolicy,
) -> Result<StreamSummary, AlertError> {
    let mut state = AlertState::new(policy.clone())?;
    let mut summary = StreamSummary::default();
    for r in LogReader::new(input) {
        let r = r?;
        let (event, style) = state.step(net, &r)?;
        writeln!(output, "{},{}", r.time_of_day, style.tag())?;
        if let Some(e) = event {
            writeln!(output, "{e}")?;
            summary.events.push(e);
        }
        output.flush()?;
        summary.registers += 1;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::sample_register;
    use proptest::prelude::*;
    use DrivingStyle::*;

    fn at(t: f64) -> Register {
        Register { time_of_day: t, ..sample_register() }
    }

    fn run(policy: AlertPolicy, labels: &[DrivingStyle]) -> Vec<AlertEvent> {
        let mut s = AlertState::new(policy).unwrap();
        labels.iter().enumerate().filter_map(|(i, &l)| s.observe(&at(1000.0 + i as f64), l).unwrap()).collect()
    }

    #[test]
    fn normal_driving_never_alerts() {
        assert!(run(AlertPolicy::default(), &[Nor; 100]).is_empty());
    }

    #[test]
    fn third_consecutive_aggressive_register_alerts() {
        let labels: Vec<_> = [Nor; 10].into_iter().chain([Agg; 5]).collect();
        let events = run(AlertPolicy::default(), &labels);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].time_of_day, 1012.0);
        assert_eq!(events[0].style, Agg);
        assert_eq!(events[0].message, "Warning: aggressive driving detected");
    }

    #[test]
    fn cooldown_suppresses_second_run() {
        let labels = [Agg, Agg, Agg, Nor, Agg, Agg, Agg];
        assert_eq!(run(AlertPolicy::default(), &labels).len(), 1);
        let no_cooldown = AlertPolicy { cooldown_s: 0.0, ..AlertPolicy::default() };
        assert_eq!(run(no_cooldown, &labels).len(), 2);
    }

    #[test]
    fn held_back_run_fires_after_cooldown() {
        let policy = AlertPolicy { cooldown_s: 10.0, ..AlertPolicy::default() };
        let mut labels = vec![Agg; 3];
        labels.push(Nor);
        labels.extend([Agg; 12]);
        let events = run(policy, &labels);
        assert_eq!(events.iter().map(|e| e.time_of_day).collect::<Vec<_>>(), [1002.0, 1012.0]);
    }

    #[test]
    fn conservative_can_trigger() {
        let policy = AlertPolicy { trigger_styles: vec![Con, Agg], consecutive_threshold: 1, cooldown_s: 0.0 };
        assert_eq!(run(policy, &[Con, Nor, Agg]).len(), 2);
    }

    #[test]
    fn out_of_order_rejected() {
        let mut s = AlertState::new(AlertPolicy::default()).unwrap();
        s.observe(&at(10.0), Nor).unwrap();
        assert!(matches!(s.observe(&at(10.0), Nor), Err(AlertError::OutOfOrderRegister { .. })));
    }

    #[test]
    fn invalid_policies() {
        let p = AlertPolicy { consecutive_threshold: 0, ..AlertPolicy::default() };
        assert!(AlertState::new(p).is_err());
        let p = AlertPolicy { cooldown_s: -1.0, ..AlertPolicy::default() };
        assert!(AlertState::new(p).is_err());
    }

    fn style_strategy() -> impl Strategy<Value = DrivingStyle> {
        prop_oneof![Just(Con), Just(Nor), Just(Agg)]
    }

    proptest! {
        #[test]
        fn events_respect_cooldown(
            labels in proptest::collection::vec(style_strategy(), 0..300),
            k in 1usize..6,
            cooldown in 0.0f64..60.0,
        ) {
            let policy = AlertPolicy { trigger_styles: vec![Agg], consecutive_threshold: k, cooldown_s: cooldown };
            let events = run(policy, &labels);
            for w in events.windows(2) {
                prop_assert!(w[1].time_of_day - w[0].time_of_day >= cooldown);
                prop_assert!(w[1].time_of_day > w[0].time_of_day);
            }
            if cooldown > 0.0 && !labels.is_empty() {
                let duration = (labels.len() - 1) as f64;
                prop_assert!(events.len() as f64 <= (duration / cooldown).floor() + 1.0);
            }
        }
    }
}
