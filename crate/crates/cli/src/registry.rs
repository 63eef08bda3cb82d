//! Model lookup by name. Built-ins are `qubit_rotation`,
//! `local_qudit:<d>` and `real_rotation:<d>`; library users can register
//! additional constructors.

use std::collections::HashMap;
use std::sync::Arc;

use dnull_core::models::PureStateModel;

use crate::CliError;

type Constructor = Arc<dyn Fn(Option<&str>) -> Result<PureStateModel, String> + Send + Sync>;

pub struct ModelRegistry {
    constructors: HashMap<String, Constructor>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        let mut constructors: HashMap<String, Constructor> = HashMap::new();
        constructors.insert(
            "qubit_rotation".into(),
            Arc::new(|arg| {
                if arg.is_some() {
                    return Err("qubit_rotation takes no argument".into());
                }
                Ok(dnull_core::qubit_rotation_model())
            }),
        );
        constructors.insert(
            "local_qudit".into(),
            Arc::new(|arg| {
                let d = parse_dim(arg)?;
                dnull_core::local_qudit_model(d).map_err(|e| e.to_string())
            }),
        );
        constructors.insert(
            "real_rotation".into(),
            Arc::new(|arg| {
                let d = parse_dim(arg)?;
                dnull_core::real_rotation_model(d).map_err(|e| e.to_string())
            }),
        );
        Self { constructors }
    }
}

fn parse_dim(arg: Option<&str>) -> Result<usize, String> {
    arg.ok_or_else(|| "missing dimension (use e.g. local_qudit:3)".to_string())?
        .parse::<usize>()
        .map_err(|e| format!("bad dimension: {e}"))
}

impl ModelRegistry {
    /// Register a custom constructor under `name`; invoked as
    /// `name` or `name:<arg>`.
    pub fn register<F>(&mut self, name: &str, f: F)
    where
        F: Fn(Option<&str>) -> Result<PureStateModel, String> + Send + Sync + 'static,
    {
        self.constructors.insert(name.to_string(), Arc::new(f));
    }

    pub fn build(&self, spec: &str) -> Result<PureStateModel, CliError> {
        let (name, arg) = match spec.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (spec, None),
        };
        let ctor = self
            .constructors
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown model '{spec}'")))?;
        ctor(arg).map_err(CliError::Config)
    }
}

/// Build a model from the built-in registry.
pub fn build_model(spec: &str) -> Result<PureStateModel, CliError> {
    ModelRegistry::default().build(spec)
}
