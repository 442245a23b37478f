use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use tempfile::TempDir;

use super::{Backend, SolveOutcome, SolveStatus, SolverError, Work};
use crate::encoder::Task;
use crate::milp::{parse_solution, write_lp, MilpModel, SolutionStatus};

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(100);

const BUNDLED_SCRIPT: &str = include_str!("../../assets/milp_solve.py");

/// How to invoke an external solver.
///
/// `command` is split on whitespace; in every word the placeholders
/// `{lp_path}`, `{sol_path}`, `{time_limit}` (seconds) and `{seed}` are
/// substituted. The process must write a solution file (see
/// [`crate::milp::parse_solution`]) to `{sol_path}` and exit with 0; any
/// other exit code is reported as a backend error.
#[derive(Debug, Clone)]
pub struct ExternalConfig {
    pub command: String,
    pub time_limit: Duration,
    pub seed: u64,
    /// Extra environment variables; the parent environment is inherited.
    pub env: Vec<(String, String)>,
}

impl ExternalConfig {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalConfig {
            command: command.into(),
            time_limit: DEFAULT_TIME_LIMIT,
            seed: 0,
            env: Vec::new(),
        }
    }

    fn argv(&self, lp: &str, sol: &str) -> Vec<String> {
        let limit = format!("{}", self.time_limit.as_secs_f64());
        let seed = self.seed.to_string();
        self.command
            .split_whitespace()
            .map(|w| {
                w.replace("{lp_path}", lp)
                    .replace("{sol_path}", sol)
                    .replace("{time_limit}", &limit)
                    .replace("{seed}", &seed)
            })
            .collect()
    }
}

/// Writes `model` to an LP file, runs the configured solver, parses its
/// solution and re-checks it against every constraint before reporting it.
pub fn solve_external(model: &MilpModel, config: &ExternalConfig) -> Result<SolveOutcome, SolverError> {
    let dir = tempfile::Builder::new().prefix("boundfa-").tempdir()?;
    let lp_path = dir.path().join("model.lp");
    let sol_path = dir.path().join("model.sol");
    std::fs::write(&lp_path, write_lp(model))?;

    let argv = config.argv(&lp_path.to_string_lossy(), &sol_path.to_string_lossy());
    let (program, args) = argv.split_first().ok_or(SolverError::EmptyCommand)?;
    let start = Instant::now();
    let output = Command::new(program).args(args).envs(config.env.iter().cloned()).output()?;
    let wall = start.elapsed();
    if !output.status.success() {
        return Err(SolverError::Process {
            code: output.status.code(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    let text = std::fs::read_to_string(&sol_path)?;
    let solution = parse_solution(&text, model)?;
    let status = match solution.status {
        SolutionStatus::Optimal => SolveStatus::Optimal,
        SolutionStatus::Feasible => SolveStatus::Feasible,
        SolutionStatus::Infeasible => SolveStatus::Infeasible,
        SolutionStatus::LimitReached => SolveStatus::LimitReached,
        SolutionStatus::Unbounded => return Err(SolverError::Unbounded),
    };
    if let Some(a) = &solution.assignment {
        model.check(a).map_err(SolverError::Reverification)?;
    }
    Ok(SolveOutcome {
        status,
        assignment: solution.assignment,
        work: Work {
            wall,
            units: solution.work,
        },
    })
}

#[derive(Debug, Clone)]
pub struct ExternalBackend {
    config: ExternalConfig,
    // keeps the bundled adapter script alive
    _script_dir: Option<Arc<TempDir>>,
}

impl ExternalBackend {
    pub fn new(config: ExternalConfig) -> Self {
        ExternalBackend {
            config,
            _script_dir: None,
        }
    }

    /// HiGHS through scipy, using the adapter script shipped with this crate.
    /// The interpreter is `python3` unless `BOUNDFA_PYTHON` is set.
    pub fn bundled(time_limit: Duration, seed: u64) -> std::io::Result<Self> {
        let dir = tempfile::Builder::new().prefix("boundfa-adapter-").tempdir()?;
        let script: PathBuf = dir.path().join("milp_solve.py");
        std::fs::write(&script, BUNDLED_SCRIPT)?;
        let python = std::env::var("BOUNDFA_PYTHON").unwrap_or_else(|_| "python3".to_string());
        let mut config = ExternalConfig::new(format!(
            "{python} {} {{lp_path}} {{sol_path}} --time-limit {{time_limit}} --seed {{seed}}",
            script.display()
        ));
        config.time_limit = time_limit;
        config.seed = seed;
        Ok(ExternalBackend {
            config,
            _script_dir: Some(Arc::new(dir)),
        })
    }

    pub fn config(&self) -> &ExternalConfig {
        &self.config
    }

    /// Source of the bundled adapter, for users who want to install it.
    pub fn bundled_script() -> &'static str {
        BUNDLED_SCRIPT
    }
}

impl Backend for ExternalBackend {
    fn name(&self) -> String {
        if self._script_dir.is_some() {
            "external:highs-scipy".to_string()
        } else {
            format!("external:{}", self.config.command)
        }
    }

    fn solve(&self, _task: &Task<'_>, model: &MilpModel) -> Result<SolveOutcome, SolverError> {
        solve_external(model, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, Relation, VarId};

    #[test]
    fn placeholders_substitute() {
        let mut c = ExternalConfig::new("solve --in {lp_path} --out={sol_path} -t {time_limit} -s {seed}");
        c.time_limit = Duration::from_millis(2500);
        c.seed = 7;
        assert_eq!(
            c.argv("/m.lp", "/m.sol"),
            ["solve", "--in", "/m.lp", "--out=/m.sol", "-t", "2.5", "-s", "7"]
        );
    }

    fn one_var_model() -> MilpModel {
        let mut m = MilpModel::new();
        m.add_var(VarId::Final(0)).unwrap();
        m.add_constraint("c", &LinExpr::new().term(1, VarId::Final(0)), Relation::Ge, 1).unwrap();
        m
    }

    // A fake solver that copies a prepared solution file.
    fn fake(dir: &TempDir, solution: &str) -> ExternalConfig {
        let path = dir.path().join(format!("canned-{}.sol", solution.len()));
        std::fs::write(&path, solution).unwrap();
        ExternalConfig::new(format!("cp {} {{sol_path}}", path.display()))
    }

    #[test]
    fn fake_solver_statuses() {
        let dir = tempfile::tempdir().unwrap();
        let m = one_var_model();
        let out = solve_external(&m, &fake(&dir, "INFEASIBLE\n")).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(out.assignment.is_none());

        let out = solve_external(&m, &fake(&dir, "OPTIMAL\nwork 12\nf_0 1\n")).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.work.units, Some(12.0));
        assert!(out.assignment.unwrap().get(&VarId::Final(0)));
    }

    #[test]
    fn non_integral_is_backend_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = solve_external(&one_var_model(), &fake(&dir, "f_0 0.5\n")).unwrap_err();
        assert!(matches!(err, SolverError::Solution(_)));
    }

    #[test]
    fn failed_reverification_is_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let err = solve_external(&one_var_model(), &fake(&dir, "OPTIMAL\nf_0 0\n")).unwrap_err();
        assert!(matches!(err, SolverError::Reverification(_)));
    }

    #[test]
    fn unbounded_is_backend_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = solve_external(&one_var_model(), &fake(&dir, "UNBOUNDED\n")).unwrap_err();
        assert!(matches!(err, SolverError::Unbounded));
    }

    #[test]
    fn process_failure() {
        let m = one_var_model();
        assert!(matches!(
            solve_external(&m, &ExternalConfig::new("false")).unwrap_err(),
            SolverError::Process { .. }
        ));
        assert!(matches!(
            solve_external(&m, &ExternalConfig::new("")).unwrap_err(),
            SolverError::EmptyCommand
        ));
        assert!(matches!(
            solve_external(&m, &ExternalConfig::new("/nonexistent/solver {lp_path}")).unwrap_err(),
            SolverError::Io(_)
        ));
    }
}
