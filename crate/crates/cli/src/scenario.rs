//! The `robagg-scenario/1` file format and its validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use robagg_core::{Agent, Ball, Dist, Lambda, Penalty, PhiSpec, Planner, Profile, StateSpace, StructuredSet};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = "robagg-scenario/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Evaluate,
    Aggregate,
    Project,
    Chernoff,
    Treatment,
    Ellsberg,
    Estimate,
    Asdf,
    Sdf,
    JamesStein,
    DemoInvariance,
    DemoDictator,
}

impl Command {
    pub const ALL: [Command; 12] = [
        Command::Evaluate,
        Command::Aggregate,
        Command::Project,
        Command::Chernoff,
        Command::Treatment,
        Command::Ellsberg,
        Command::Estimate,
        Command::Asdf,
        Command::Sdf,
        Command::JamesStein,
        Command::DemoInvariance,
        Command::DemoDictator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Evaluate => "evaluate",
            Command::Aggregate => "aggregate",
            Command::Project => "project",
            Command::Chernoff => "chernoff",
            Command::Treatment => "treatment",
            Command::Ellsberg => "ellsberg",
            Command::Estimate => "estimate",
            Command::Asdf => "asdf",
            Command::Sdf => "sdf",
            Command::JamesStein => "jamesstein",
            Command::DemoInvariance => "demo-invariance",
            Command::DemoDictator => "demo-dictator",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Commands that read the agents, acts and planner as a social profile.
    pub fn needs_profile(self) -> bool {
        matches!(
            self,
            Command::Evaluate
                | Command::Aggregate
                | Command::Project
                | Command::Chernoff
                | Command::DemoInvariance
                | Command::DemoDictator
        )
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A positive real or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSpec(pub Lambda);

impl<'de> Deserialize<'de> for LambdaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Lambda::new(v).map(LambdaSpec).map_err(serde::de::Error::custom),
            Raw::Text(s) if s == "inf" => Ok(LambdaSpec(Lambda::Infinite)),
            Raw::Text(s) => {
                Err(serde::de::Error::custom(format!("lambda must be a positive number or \"inf\", got \"{s}\"")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyName {
    Kl,
    Chi2,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StructuredSpec {
    /// The agents' relative-entropy balls.
    #[default]
    Balls,
    Singleton {
        belief: Vec<f64>,
    },
    /// Listed beliefs, or the agents' reference models when omitted.
    Finite {
        #[serde(default)]
        beliefs: Option<Vec<Vec<f64>>>,
    },
    Hull {
        #[serde(default)]
        beliefs: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: f64,
    pub lambda: LambdaSpec,
    #[serde(default = "default_penalty")]
    pub penalty: PenaltyName,
    #[serde(default)]
    pub structured: StructuredSpec,
}

fn default_penalty() -> PenaltyName {
    PenaltyName::Kl
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub name: String,
    pub utility: BTreeMap<String, f64>,
    pub reference: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: String,
    #[serde(default)]
    pub states: Vec<String>,
    #[serde(default)]
    pub outcomes: Vec<String>,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub acts: BTreeMap<String, Vec<String>>,
    pub planner: PlannerSpec,
    pub command: String,
    #[serde(default)]
    pub command_params: serde_json::Map<String, serde_json::Value>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub command: Command,
    pub states: Option<StateSpace>,
    pub profile: Option<Profile>,
}

impl Scenario {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| CliError::schema(e.to_string()))?;
        Self::validate(file)
    }

    pub fn validate(file: ScenarioFile) -> CliResult<Self> {
        if file.version != VERSION {
            return Err(CliError::schema(format!("version must be \"{VERSION}\", got \"{}\"", file.version)));
        }
        let command = Command::parse(&file.command)
            .ok_or_else(|| CliError::schema(format!("unknown command \"{}\"", file.command)))?;
        let states = if file.states.is_empty() {
            None
        } else {
            Some(StateSpace::new(file.states.iter().cloned()).map_err(|e| CliError::schema(format!("states: {e}")))?)
        };
        let outcomes: BTreeSet<&str> = file.outcomes.iter().map(String::as_str).collect();
        if outcomes.len() != file.outcomes.len() {
            return Err(CliError::schema("outcome ids must be unique"));
        }
        let n = file.states.len();
        for (id, act) in &file.acts {
            if act.len() != n {
                return Err(CliError::schema(format!("act \"{id}\" has {} entries for {n} states", act.len())));
            }
            if let Some(o) = act.iter().find(|o| !outcomes.contains(o.as_str())) {
                return Err(CliError::schema(format!("act \"{id}\" references undeclared outcome \"{o}\"")));
            }
        }
        let mut names = BTreeSet::new();
        for a in &file.agents {
            if !names.insert(a.name.as_str()) {
                return Err(CliError::schema(format!("duplicate agent name \"{}\"", a.name)));
            }
            if a.reference.len() != n {
                return Err(CliError::schema(format!(
                    "agent \"{}\" reference has {} entries for {n} states",
                    a.name,
                    a.reference.len()
                )));
            }
            if let Some(o) = a.utility.keys().find(|o| !outcomes.contains(o.as_str())) {
                return Err(CliError::schema(format!("agent \"{}\" rates undeclared outcome \"{o}\"", a.name)));
            }
            if let Some(o) = outcomes.iter().find(|o| !a.utility.contains_key(**o)) {
                return Err(CliError::schema(format!("agent \"{}\" has no utility for outcome \"{o}\"", a.name)));
            }
        }
        if let Some(beta) = &file.planner.beta {
            if beta.len() != file.agents.len() {
                return Err(CliError::schema(format!(
                    "planner.beta has {} entries for {} agents",
                    beta.len(),
                    file.agents.len()
                )));
            }
        }
        let profile = if command.needs_profile() {
            if file.agents.is_empty() || n == 0 {
                return Err(CliError::schema(format!("command \"{command}\" needs states and at least one agent")));
            }
            Some(build_profile(&file)?)
        } else {
            None
        };
        Ok(Self { file, command, states, profile })
    }

    pub fn lambda(&self) -> Lambda {
        self.file.planner.lambda.0
    }

    pub fn profile(&self) -> CliResult<&Profile> {
        self.profile.as_ref().ok_or_else(|| CliError::schema("scenario declares no agent profile"))
    }

    pub fn state_labels(&self) -> &[String] {
        &self.file.states
    }

    pub fn agent_names(&self) -> Vec<String> {
        self.file.agents.iter().map(|a| a.name.clone()).collect()
    }

    /// Parses `command_params` into the command's parameter struct.
    pub fn params<T: DeserializeOwned>(&self) -> CliResult<T> {
        serde_json::from_value(serde_json::Value::Object(self.file.command_params.clone()))
            .map_err(|e| CliError::schema(format!("command_params: {e}")))
    }

    pub fn planner(&self) -> CliResult<Planner> {
        let profile = self.profile()?;
        let spec = &self.file.planner;
        let refs = || profile.references();
        let listed = |beliefs: &Option<Vec<Vec<f64>>>| -> CliResult<Vec<Dist>> {
            match beliefs {
                None => Ok(refs()),
                Some(list) => list.iter().map(|b| dist(b.clone(), "planner.structured.beliefs")).collect(),
            }
        };
        let structured = match &spec.structured {
            StructuredSpec::Balls => StructuredSet::BallIntersection(profile.balls()),
            StructuredSpec::Singleton { belief } => {
                StructuredSet::Singleton(dist(belief.clone(), "planner.structured.belief")?)
            }
            StructuredSpec::Finite { beliefs } => StructuredSet::FiniteSet(listed(beliefs)?),
            StructuredSpec::Hull { beliefs } => StructuredSet::HullOfFinite(listed(beliefs)?),
        };
        let penalty = match spec.penalty {
            PenaltyName::Kl => Penalty::Kl,
            PenaltyName::Chi2 => Penalty::Phi(PhiSpec::chi_squared()),
        };
        Planner::new(self.lambda(), penalty, structured).map_err(|e| CliError::schema(format!("planner: {e}")))
    }

    pub fn balls(&self) -> CliResult<Vec<Ball>> {
        Ok(self.profile()?.balls())
    }
}

fn build_profile(file: &ScenarioFile) -> CliResult<Profile> {
    let agents = file
        .agents
        .iter()
        .map(|a| {
            let reference = dist(a.reference.clone(), &format!("agent \"{}\" reference", a.name))?;
            Agent::new(a.name.clone(), a.utility.clone(), reference, a.radius)
                .map_err(|e| CliError::schema(format!("agent \"{}\": {e}", a.name)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let beta = file.planner.beta.clone().unwrap_or_else(|| vec![1.0 / agents.len() as f64; agents.len()]);
    Profile::new(agents, file.acts.clone(), beta, file.planner.gamma)
        .map_err(|e| CliError::schema(format!("profile: {e}")))
}

pub fn dist(values: Vec<f64>, what: &str) -> CliResult<Dist> {
    Dist::new(values).map_err(|e| CliError::schema(format!("{what}: {e}")))
}
