//! [`MipBackend`] over the HiGHS C API.

use std::ffi::{c_void, CString};
use std::os::raw::c_char;
use std::ptr;

use highs_sys::*;

use super::{BackendStatus, MipBackend, RawSolve, SolveError};
use crate::formulation::{MipModel, VarKind};

/// HiGHS branch-and-cut. Each call creates a fresh solver object, so one
/// backend value may be shared between threads.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

struct Handle(*mut c_void);

impl Handle {
    fn new() -> Self {
        // SAFETY: Highs_create has no preconditions.
        Handle(unsafe { Highs_create() })
    }

    fn check(&self, what: &str, status: HighsInt) -> Result<(), SolveError> {
        if status == STATUS_ERROR {
            Err(SolveError::Backend(format!("HiGHS rejected {what}")))
        } else {
            Ok(())
        }
    }

    fn set_bool(&self, name: &str, value: bool) -> Result<(), SolveError> {
        let key = CString::new(name).expect("option names have no NUL");
        // SAFETY: valid handle and NUL-terminated key.
        let status = unsafe { Highs_setBoolOptionValue(self.0, key.as_ptr(), value as HighsInt) };
        self.check(name, status)
    }

    fn set_double(&self, name: &str, value: f64) -> Result<(), SolveError> {
        let key = CString::new(name).expect("option names have no NUL");
        // SAFETY: as above.
        let status = unsafe { Highs_setDoubleOptionValue(self.0, key.as_ptr(), value) };
        self.check(name, status)
    }

    fn set_int(&self, name: &str, value: HighsInt) -> Result<(), SolveError> {
        let key = CString::new(name).expect("option names have no NUL");
        // SAFETY: as above.
        let status = unsafe { Highs_setIntOptionValue(self.0, key.as_ptr(), value) };
        self.check(name, status)
    }

    fn double_info(&self, name: &str) -> Option<f64> {
        let key = CString::new(name).expect("info names have no NUL");
        let mut value = 0.0;
        // SAFETY: valid handle, key, and out pointer.
        let status =
            unsafe { Highs_getDoubleInfoValue(self.0, key.as_ptr() as *const c_char, &mut value) };
        (status == STATUS_OK).then_some(value)
    }

    fn int_info(&self, name: &str) -> Option<HighsInt> {
        let key = CString::new(name).expect("info names have no NUL");
        let mut value: HighsInt = 0;
        // SAFETY: as above.
        let status =
            unsafe { Highs_getIntInfoValue(self.0, key.as_ptr() as *const c_char, &mut value) };
        (status == STATUS_OK).then_some(value)
    }
}

impl Drop for Handle {
    fn drop(&mut self) {
        // SAFETY: the pointer came from Highs_create and is dropped once.
        unsafe { Highs_destroy(self.0) }
    }
}

fn to_int(n: usize, what: &str) -> Result<HighsInt, SolveError> {
    HighsInt::try_from(n).map_err(|_| SolveError::Backend(format!("too many {what} for HiGHS")))
}

impl MipBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve(
        &self,
        model: &MipModel,
        start: Option<&[f64]>,
        relative_gap: f64,
        time_limit: Option<f64>,
        seed: u64,
    ) -> Result<RawSolve, SolveError> {
        let ncol = model.variables.len();
        let nrow = model.rows.len();
        let mut col_lower = Vec::with_capacity(ncol);
        let mut col_upper = Vec::with_capacity(ncol);
        let mut integrality = Vec::with_capacity(ncol);
        for v in &model.variables {
            col_lower.push(v.lower);
            col_upper.push(v.upper);
            integrality.push(match v.kind {
                VarKind::Binary => VAR_TYPE_INTEGER,
                VarKind::Continuous => VAR_TYPE_CONTINUOUS,
            });
        }
        let mut row_lower = Vec::with_capacity(nrow);
        let mut row_upper = Vec::with_capacity(nrow);
        let mut a_start = Vec::with_capacity(nrow + 1);
        let mut a_index = Vec::new();
        let mut a_value = Vec::new();
        for row in &model.rows {
            row_lower.push(row.lower);
            row_upper.push(row.upper);
            a_start.push(to_int(a_index.len(), "nonzeros")?);
            for &(col, coef) in &row.coefficients {
                a_index.push(to_int(col, "columns")?);
                a_value.push(coef);
            }
        }
        a_start.push(to_int(a_index.len(), "nonzeros")?);

        let h = Handle::new();
        h.set_bool("output_flag", false)?;
        h.set_double("mip_rel_gap", relative_gap)?;
        h.set_int("random_seed", (seed % i32::MAX as u64) as HighsInt)?;
        if let Some(limit) = time_limit {
            h.set_double("time_limit", limit.max(0.01))?;
        }
        // SAFETY: every array has the length HiGHS expects for row-wise input;
        // they outlive the call, which copies them.
        let status = unsafe {
            Highs_passMip(
                h.0,
                to_int(ncol, "columns")?,
                to_int(nrow, "rows")?,
                to_int(a_index.len(), "nonzeros")?,
                MATRIX_FORMAT_ROW_WISE,
                OBJECTIVE_SENSE_MINIMIZE,
                model.objective_offset,
                model.objective.as_ptr(),
                col_lower.as_ptr(),
                col_upper.as_ptr(),
                row_lower.as_ptr(),
                row_upper.as_ptr(),
                a_start.as_ptr(),
                a_index.as_ptr(),
                a_value.as_ptr(),
                integrality.as_ptr(),
            )
        };
        h.check("the model", status)?;
        if let Some(values) = start {
            if values.len() != ncol {
                return Err(SolveError::Backend(format!(
                    "start has {} values for {ncol} columns",
                    values.len()
                )));
            }
            // SAFETY: `values` has ncol entries; the other pointers may be null.
            let status = unsafe {
                Highs_setSolution(h.0, values.as_ptr(), ptr::null(), ptr::null(), ptr::null())
            };
            h.check("the start solution", status)?;
        }
        // SAFETY: model passed above.
        let status = unsafe { Highs_run(h.0) };
        h.check("the run", status)?;
        // SAFETY: valid handle.
        let model_status = unsafe { Highs_getModelStatus(h.0) };
        let has_solution = h.int_info("primal_solution_status") == Some(SOLUTION_STATUS_FEASIBLE);
        let status = match model_status {
            MODEL_STATUS_OPTIMAL | MODEL_STATUS_MODEL_EMPTY => BackendStatus::Optimal,
            MODEL_STATUS_INFEASIBLE | MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE => {
                BackendStatus::Infeasible
            }
            MODEL_STATUS_REACHED_TIME_LIMIT
            | MODEL_STATUS_REACHED_ITERATION_LIMIT
            | MODEL_STATUS_REACHED_SOLUTION_LIMIT
            | MODEL_STATUS_REACHED_INTERRUPT => BackendStatus::TimeLimit,
            other => {
                return Err(SolveError::Backend(format!(
                    "HiGHS finished with model status {other}"
                )))
            }
        };
        let values = if has_solution && status != BackendStatus::Infeasible {
            let mut col = vec![0.0; ncol];
            let mut row = vec![0.0; nrow];
            // SAFETY: buffers sized to the model; duals not requested.
            let status = unsafe {
                Highs_getSolution(
                    h.0,
                    col.as_mut_ptr(),
                    ptr::null_mut(),
                    row.as_mut_ptr(),
                    ptr::null_mut(),
                )
            };
            h.check("solution retrieval", status)?;
            Some(col)
        } else {
            None
        };
        let objective = values
            .as_ref()
            .map(|v| model.objective_at(v))
            .unwrap_or(f64::INFINITY);
        let bound = if model.binary_count() == 0 {
            objective
        } else {
            h.double_info("mip_dual_bound").unwrap_or(f64::NEG_INFINITY)
        };
        let status = match (status, &values) {
            (BackendStatus::Optimal, None) if ncol > 0 => BackendStatus::Infeasible,
            (s, _) => s,
        };
        Ok(RawSolve {
            status,
            values,
            objective,
            bound,
        })
    }
}
