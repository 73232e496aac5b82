//! Disclosure responses for utterances that ask whether the user is talking
//! to a machine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::IntentClassifier;
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AicPolicy {
    /// Respond to AIC utterances the same way as POS.
    Clarify,
    #[default]
    PassThrough,
}

impl FromStr for AicPolicy {
    type Err = GuardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clarify" => Ok(AicPolicy::Clarify),
            "pass_through" | "pass-through" => Ok(AicPolicy::PassThrough),
            _ => Err(GuardError::Config { line: 0, message: format!("unknown aic_policy {s:?}") }),
        }
    }
}

impl fmt::Display for AicPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AicPolicy::Clarify => "clarify",
            AicPolicy::PassThrough => "pass_through",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuardError {
    #[error("clear_confirm is required")]
    MissingClearConfirm,
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

/// The parts of a disclosure: a clear confirmation (CC), who makes the
/// system (WM), its purpose (P) and how to report problems (HR).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DisclosureConfig {
    pub clear_confirm: String,
    pub who_makes: Option<String>,
    pub purpose: Option<String>,
    pub how_report: Option<String>,
    pub aic_policy: AicPolicy,
}

const CC: &str = "I am a chatbot.";
const WM: &str = "made by Example.com.";
const P: &str = "I am designed to help you get things done.";
const P_ALT: &str = "I am designed to help you with your insurance policy.";
const HR: &str = "If I say anything that seems wrong, you can report it to Example.com by saying \"report problem\" or by going to Example.com/bot-issue.";

/// Named presets and the components they use.
pub const PRESETS: [&str; 8] = ["cc", "cc+wm", "cc+p", "cc+wm+p", "cc+wm+p+hr", "cc-ai", "cc-extra", "cc+p-alt"];

impl DisclosureConfig {
    pub fn new(clear_confirm: impl Into<String>) -> Self {
        DisclosureConfig { clear_confirm: clear_confirm.into(), ..Default::default() }
    }

    pub fn preset(name: &str) -> Result<Self, GuardError> {
        let some = |s: &str| Some(s.to_string());
        let mut c = DisclosureConfig::new(CC);
        match name {
            "cc" => {}
            "cc+wm" => c.who_makes = some(WM),
            "cc+p" => c.purpose = some(P),
            "cc+wm+p" => (c.who_makes, c.purpose) = (some(WM), some(P)),
            "cc+wm+p+hr" => (c.who_makes, c.purpose, c.how_report) = (some(WM), some(P), some(HR)),
            "cc-ai" => c.clear_confirm = "I am an A.I.".into(),
            "cc-extra" => c.clear_confirm = "I'm not a person. I'm an A.I.".into(),
            "cc+p-alt" => c.purpose = some(P_ALT),
            _ => return Err(GuardError::UnknownPreset(name.to_string())),
        }
        Ok(c)
    }

    /// Parses `key=value` lines. `#` starts a comment line. A `preset=` line
    /// loads a preset that later keys override.
    pub fn parse(src: &str) -> Result<Self, GuardError> {
        let mut c = DisclosureConfig::default();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| GuardError::Config { line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let opt = || (!value.is_empty()).then(|| value.to_string());
            match key {
                "preset" => c = DisclosureConfig::preset(value).map_err(|e| err(e.to_string()))?,
                "clear_confirm" => c.clear_confirm = value.to_string(),
                "who_makes" => c.who_makes = opt(),
                "purpose" => c.purpose = opt(),
                "how_report" => c.how_report = opt(),
                "aic_policy" => c.aic_policy = value.parse().map_err(|_| err(format!("unknown aic_policy {value:?}")))?,
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), GuardError> {
        if self.clear_confirm.trim().is_empty() {
            Err(GuardError::MissingClearConfirm)
        } else {
            Ok(())
        }
    }

    /// Writes the config back out in the `key=value` format.
    pub fn to_config_string(&self) -> String {
        let mut out = format!("clear_confirm={}\n", self.clear_confirm);
        for (k, v) in [("who_makes", &self.who_makes), ("purpose", &self.purpose), ("how_report", &self.how_report)] {
            if let Some(v) = v {
                out.push_str(&format!("{k}={v}\n"));
            }
        }
        out.push_str(&format!("aic_policy={}\n", self.aic_policy));
        out
    }
}

/// Joins the present components in CC, WM, P, HR order with single spaces.
/// A component starting in lowercase continues the previous sentence, so
/// that sentence's final period is dropped ("I am a chatbot" + "made by ...").
pub fn compose_response(cfg: &DisclosureConfig) -> Result<String, GuardError> {
    cfg.validate()?;
    let parts = [Some(&cfg.clear_confirm), cfg.who_makes.as_ref(), cfg.purpose.as_ref(), cfg.how_report.as_ref()];
    let mut out = String::new();
    for part in parts.into_iter().flatten().map(|p| p.trim()).filter(|p| !p.is_empty()) {
        if !out.is_empty() {
            if part.starts_with(|c: char| c.is_lowercase()) && out.ends_with('.') {
                out.pop();
            }
            out.push(' ');
        }
        out.push_str(part);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Respond,
    Pass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardDecision {
    pub text: String,
    pub label: Label,
    pub action: Action,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    pub classifier_id: String,
}

fn decide(text: &str, label: Label, classifier_id: &str, cfg: &DisclosureConfig, response: &str) -> GuardDecision {
    let respond = match label {
        Label::Pos => true,
        Label::Aic => cfg.aic_policy == AicPolicy::Clarify,
        Label::Neg => false,
    };
    GuardDecision {
        text: text.to_string(),
        label,
        action: if respond { Action::Respond } else { Action::Pass },
        response: respond.then(|| response.to_string()),
        classifier_id: classifier_id.to_string(),
    }
}

/// Classifies `utterance` and decides whether to disclose.
pub fn guard(utterance: &str, classifier: &dyn IntentClassifier, cfg: &DisclosureConfig) -> Result<GuardDecision, GuardError> {
    let response = compose_response(cfg)?;
    let label = classifier.predict(utterance).label;
    Ok(decide(utterance, label, classifier.id(), cfg, &response))
}

/// Batch form of [`guard`]; output order matches input order.
pub fn guard_batch(
    utterances: &[&str],
    classifier: &dyn IntentClassifier,
    cfg: &DisclosureConfig,
) -> Result<Vec<GuardDecision>, GuardError> {
    let response = compose_response(cfg)?;
    Ok(classifier
        .predict_batch(utterances)
        .into_iter()
        .zip(utterances)
        .map(|(p, t)| decide(t, p.label, classifier.id(), cfg, &response))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Grammar;
    use crate::recognizer::RecognizerModel;

    fn compose(name: &str) -> String {
        compose_response(&DisclosureConfig::preset(name).unwrap()).unwrap()
    }

    #[test]
    fn response_table_strings() {
        assert_eq!(compose("cc"), "I am a chatbot.");
        assert_eq!(compose("cc+wm"), "I am a chatbot made by Example.com.");
        assert_eq!(compose("cc+p"), "I am a chatbot. I am designed to help you get things done.");
        assert_eq!(
            compose("cc+wm+p"),
            "I am a chatbot made by Example.com. I am designed to help you get things done."
        );
        assert_eq!(
            compose("cc+wm+p+hr"),
            "I am a chatbot made by Example.com. I am designed to help you get things done. \
             If I say anything that seems wrong, you can report it to Example.com by saying \
             \"report problem\" or by going to Example.com/bot-issue."
        );
        assert_eq!(compose("cc-extra"), "I'm not a person. I'm an A.I.");
    }

    #[test]
    fn presets_are_distinct() {
        let all: std::collections::HashSet<String> = PRESETS.iter().map(|p| compose(p)).collect();
        assert_eq!(all.len(), PRESETS.len());
    }

    #[test]
    fn missing_clear_confirm() {
        assert_eq!(compose_response(&DisclosureConfig::default()), Err(GuardError::MissingClearConfirm));
        assert_eq!(DisclosureConfig::parse("purpose=x\n"), Err(GuardError::MissingClearConfirm));
    }

    #[test]
    fn config_file() {
        let c = DisclosureConfig::parse("# deployment\npreset=cc+wm\npurpose = I help.\naic_policy=clarify\n").unwrap();
        assert_eq!(c.who_makes.as_deref(), Some(WM));
        assert_eq!(c.purpose.as_deref(), Some("I help."));
        assert_eq!(c.aic_policy, AicPolicy::Clarify);
        assert_eq!(DisclosureConfig::parse(&c.to_config_string()).unwrap(), c);
        assert!(matches!(DisclosureConfig::parse("clear_confirm=x\ncolor=red"), Err(GuardError::Config { line: 2, .. })));
        assert!(matches!(DisclosureConfig::parse("clear_confirm"), Err(GuardError::Config { line: 1, .. })));
        assert!(matches!(DisclosureConfig::parse("preset=nope"), Err(GuardError::Config { line: 1, .. })));
    }

    #[test]
    fn decisions() {
        let pos: Grammar = "S -> \"are you a robot\"".parse().unwrap();
        let aic: Grammar = "S -> \"you sound robotic\"".parse().unwrap();
        let m = RecognizerModel::new(&pos, &aic, true);
        let cfg = DisclosureConfig::preset("cc").unwrap();
        let d = guard("are you a robot", &m, &cfg).unwrap();
        assert_eq!((d.action, d.response.as_deref()), (Action::Respond, Some("I am a chatbot.")));
        assert_eq!(d.classifier_id, "grammar");
        assert_eq!(guard("do you like robots?", &m, &cfg).unwrap().action, Action::Pass);
        let d = guard("you sound robotic", &m, &cfg).unwrap();
        assert_eq!((d.label, d.action, d.response), (Label::Aic, Action::Pass, None));
        let clarify = DisclosureConfig { aic_policy: AicPolicy::Clarify, ..cfg.clone() };
        assert_eq!(guard("you sound robotic", &m, &clarify).unwrap().action, Action::Respond);
        let batch = guard_batch(&["x", "are you a robot", "y"], &m, &cfg).unwrap();
        let actions: Vec<Action> = batch.iter().map(|d| d.action).collect();
        assert_eq!(actions, [Action::Pass, Action::Respond, Action::Pass]);
    }
}
