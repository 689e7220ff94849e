"""Complex Hermitian conic programs and the solver seam.

A :class:`ConicProgram` has Hermitian PSD matrix variables, real scalar
variables, a real linear objective, affine Hermitian LMI blocks and linear
(in)equalities.  LMI blocks are sums of congruence terms ``c * L X L^H``,
scalar terms ``s * S`` and a constant, which covers every block the
beamforming problems need and keeps the representation solver-neutral.

Solving goes through :func:`compile_program`, which realifies the program
into a :class:`StandardForm`

    minimize    c^T x
    subject to  A x + s = b,   s in K,

with ``K`` a product of zero, nonnegative and PSD-triangle cones, stored as
a sparse matrix.  Each Hermitian ``n x n`` matrix ``Y`` enters a PSD cone as
its real embedding ``[[Re Y, -Im Y], [Im Y, Re Y]]`` (which is PSD iff ``Y``
is and doubles each eigenvalue's multiplicity), packed column-major upper
triangle with off-diagonals scaled by ``sqrt(2)``.  A Hermitian variable
``X`` of order ``m`` is parameterised by ``m^2`` reals: the diagonal, then
``(Re X_ij, Im X_ij)`` for ``i < j`` in row-major order.  The map is a
bijection, so solutions map back losslessly.

Any adapter with a ``solve(form, tolerance) -> RawResult`` method can be
plugged in; :class:`ClarabelAdapter` is the default.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

DEFAULT_TOLERANCE = 1e-7
FEASIBILITY_TOLERANCE = 1e-6
_HERMITIAN_TOL = 1e-12

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical_failure"


class ProgramError(ValueError):
    """Raised for malformed programs (dimensions, non-Hermitian data)."""


@dataclass(frozen=True)
class MatrixVariable:
    name: str
    dim: int
    hermitian_psd: bool = True


@dataclass(frozen=True)
class ScalarVariable:
    name: str
    nonneg: bool = True


@dataclass(frozen=True)
class Congruence:
    """The term ``coef * left @ X @ left^H`` of an LMI block."""

    var: str
    left: np.ndarray
    coef: float = 1.0


@dataclass(frozen=True)
class LinearForm:
    """``sum Re tr(C_v X_v) + sum a_s s + constant``."""

    matrix_terms: tuple = ()
    scalar_terms: tuple = ()
    constant: float = 0.0

    def evaluate(self, matrices, scalars):
        total = self.constant
        for var, c in self.matrix_terms:
            total += float(np.real(np.sum(np.asarray(c) * np.asarray(matrices[var]).T)))
        for name, a in self.scalar_terms:
            total += a * scalars[name]
        return total


@dataclass(frozen=True)
class LinearConstraint:
    form: LinearForm
    sense: str
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in ("<=", ">=", "=="):
            raise ProgramError(f"unknown constraint sense {self.sense!r}")

    def violation(self, matrices, scalars):
        lhs = self.form.evaluate(matrices, scalars)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class LMIBlock:
    """Affine Hermitian block required to be PSD."""

    constant: np.ndarray
    congruences: tuple = ()
    scalar_terms: tuple = ()
    name: str = ""

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, matrices, scalars):
        out = np.array(self.constant, dtype=complex)
        for t in self.congruences:
            out += t.coef * (t.left @ matrices[t.var] @ t.left.conj().T)
        for name, s in self.scalar_terms:
            out += scalars[name] * s
        return out


@dataclass(frozen=True)
class ConicProgram:
    matrix_variables: tuple
    scalar_variables: tuple = ()
    objective: LinearForm = field(default_factory=LinearForm)
    lmi_blocks: tuple = ()
    linear_constraints: tuple = ()

    def with_objective(self, objective: LinearForm) -> "ConicProgram":
        return replace(self, objective=objective)

    @property
    def matrix_dims(self):
        return {v.name: v.dim for v in self.matrix_variables}


def _is_hermitian(m):
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and \
        np.linalg.norm(m - m.conj().T) <= _HERMITIAN_TOL * max(1.0, np.linalg.norm(m))


def assemble(matrix_variables, scalar_variables=(), objective=None, lmi_blocks=(),
             linear_constraints=()):
    """Validate the pieces and return a :class:`ConicProgram`."""
    mvars = tuple(matrix_variables)
    svars = tuple(scalar_variables)
    names = [v.name for v in mvars] + [v.name for v in svars]
    if len(set(names)) != len(names):
        raise ProgramError("variable names must be unique")
    dims = {v.name: v.dim for v in mvars}
    for v in mvars:
        if v.dim < 1:
            raise ProgramError(f"matrix variable {v.name!r} needs dim >= 1")
    snames = {v.name for v in svars}
    objective = objective or LinearForm()

    def check_form(form, where):
        for var, c in form.matrix_terms:
            if var not in dims:
                raise ProgramError(f"{where}: unknown matrix variable {var!r}")
            if np.shape(c) != (dims[var], dims[var]) or not _is_hermitian(c):
                raise ProgramError(f"{where}: coefficient of {var!r} must be Hermitian "
                                   f"{dims[var]}x{dims[var]}")
        for name, a in form.scalar_terms:
            if name not in snames:
                raise ProgramError(f"{where}: unknown scalar variable {name!r}")
            if np.iscomplexobj(a) or not np.isfinite(a):
                raise ProgramError(f"{where}: scalar coefficients must be real")

    check_form(objective, "objective")
    for k, con in enumerate(linear_constraints):
        check_form(con.form, con.name or f"constraint {k}")

    blocks = []
    for k, blk in enumerate(lmi_blocks):
        label = blk.name or f"LMI {k}"
        c0 = np.asarray(blk.constant, dtype=complex)
        if not _is_hermitian(c0):
            raise ProgramError(f"{label}: constant term is not Hermitian")
        n = c0.shape[0]
        for t in blk.congruences:
            if t.var not in dims:
                raise ProgramError(f"{label}: unknown matrix variable {t.var!r}")
            if np.shape(t.left) != (n, dims[t.var]):
                raise ProgramError(f"{label}: congruence factor for {t.var!r} has shape "
                                   f"{np.shape(t.left)}, expected {(n, dims[t.var])}")
            if np.iscomplexobj(t.coef) or not np.isfinite(t.coef):
                raise ProgramError(f"{label}: congruence coefficients must be real")
        for name, s in blk.scalar_terms:
            if name not in snames:
                raise ProgramError(f"{label}: unknown scalar variable {name!r}")
            if np.shape(s) != (n, n) or not _is_hermitian(s):
                raise ProgramError(f"{label}: scalar term for {name!r} is not Hermitian {n}x{n}")
        blocks.append(replace(blk, constant=c0))

    return ConicProgram(mvars, svars, objective, tuple(blocks), tuple(linear_constraints))


def hermitian_coordinates(m):
    """Hermitian ``C_k`` with ``Re tr(C_k X)`` equal to the k-th real parameter of ``X``."""
    coords = []
    for k in range(m):
        c = np.zeros((m, m), dtype=complex)
        c[k, k] = 1.0
        coords.append(c)
    for i in range(m):
        for j in range(i + 1, m):
            re = np.zeros((m, m), dtype=complex)
            re[i, j] = re[j, i] = 0.5
            im = np.zeros((m, m), dtype=complex)
            im[i, j] = 0.5j
            im[j, i] = -0.5j
            coords += [re, im]
    return coords


def matrix_equality(target, sources, dim, name=""):
    """Linear constraints stating ``target = sum(sources)`` for Hermitian variables."""
    cons = []
    for k, c in enumerate(hermitian_coordinates(dim)):
        terms = ((target, c),) + tuple((src, -c) for src in sources)
        cons.append(LinearConstraint(LinearForm(terms), "==", 0.0, f"{name or target}[{k}]"))
    return cons


# ---------------------------------------------------------------------------
# realification


@lru_cache(maxsize=None)
def hermitian_basis(m):
    """Real basis of ``m x m`` Hermitian matrices, shape ``(m*m, m, m)``."""
    basis = np.zeros((m * m, m, m), dtype=complex)
    idx = np.arange(m)
    basis[idx, idx, idx] = 1.0
    k = m
    for i in range(m):
        for j in range(i + 1, m):
            basis[k, i, j] = basis[k, j, i] = 1.0
            basis[k + 1, i, j] = 1j
            basis[k + 1, j, i] = -1j
            k += 2
    return basis


def hermitian_to_params(x):
    x = np.asarray(x)
    m = x.shape[0]
    iu, ju = np.triu_indices(m, 1)
    out = np.empty(m * m)
    out[:m] = np.real(np.diag(x))
    out[m::2] = np.real(x[iu, ju])
    out[m + 1::2] = np.imag(x[iu, ju])
    return out


def params_to_hermitian(p, m):
    p = np.asarray(p, dtype=float)
    x = np.zeros((m, m), dtype=complex)
    x[np.arange(m), np.arange(m)] = p[:m]
    iu, ju = np.triu_indices(m, 1)
    x[iu, ju] = p[m::2] + 1j * p[m + 1::2]
    x[ju, iu] = np.conj(x[iu, ju])
    return x


def real_embedding(y):
    """``[[Re Y, -Im Y], [Im Y, Re Y]]`` for a (stack of) square matrices."""
    y = np.asarray(y)
    re, im = y.real, y.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def real_embedding_inverse(z):
    n = z.shape[-1] // 2
    return z[..., :n, :n] + 1j * z[..., n:, :n]


@lru_cache(maxsize=None)
def _triangle_index(n):
    rows, cols = [], []
    for c in range(n):
        for r in range(c + 1):
            rows.append(r)
            cols.append(c)
    rows, cols = np.array(rows), np.array(cols)
    scale = np.where(rows == cols, 1.0, np.sqrt(2.0))
    return rows, cols, scale


def svec(z):
    """Scaled upper-triangle packing of a (stack of) real symmetric matrices."""
    rows, cols, scale = _triangle_index(z.shape[-1])
    return z[..., rows, cols] * scale


def svec_inverse(v, n):
    rows, cols, scale = _triangle_index(n)
    z = np.zeros(np.shape(v)[:-1] + (n, n))
    vals = np.asarray(v) / scale
    z[..., rows, cols] = vals
    z[..., cols, rows] = vals
    return z


@dataclass
class StandardForm:
    """Real conic program ``min c^T x  s.t.  A x + s = b, s in K``.

    ``cones`` is a list of ``(kind, dim)`` with kind in ``zero``,
    ``nonneg`` and ``psd`` (``dim`` is the matrix order for ``psd``).
    ``offset`` is the objective constant.
    """

    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: list
    offset: float
    layout: dict

    @property
    def n_variables(self):
        return self.A.shape[1]


@dataclass
class RawResult:
    x: np.ndarray
    z: np.ndarray
    status: str
    iterations: int
    primal_objective: float
    dual_objective: float
    solve_time: float


def _layout(program):
    layout, k = {}, 0
    for v in program.matrix_variables:
        layout[v.name] = (k, v.dim)
        k += v.dim * v.dim
    for v in program.scalar_variables:
        layout[v.name] = (k, 0)
        k += 1
    return layout, k


def _form_row(form, layout, n):
    row = np.zeros(n)
    for var, c in form.matrix_terms:
        start, m = layout[var]
        row[start:start + m * m] += np.einsum("ab,kba->k", np.asarray(c), hermitian_basis(m)).real
    for name, a in form.scalar_terms:
        row[layout[name][0]] += a
    return row


def objective_vector(program, layout=None):
    if layout is None:
        layout, _ = _layout(program)
    n = sum(m * m if m else 1 for _, m in layout.values())
    return _form_row(program.objective, layout, n), program.objective.constant


def compile_program(program: ConicProgram) -> StandardForm:
    """Realify ``program`` into sparse standard form."""
    layout, n = _layout(program)
    blocks_a, blocks_b, cones = [], [], []

    eq_rows, eq_b, ineq_rows, ineq_b = [], [], [], []
    for con in program.linear_constraints:
        row = _form_row(con.form, layout, n)
        if con.sense == "==":
            eq_rows.append(row)
            eq_b.append(con.rhs)
        elif con.sense == "<=":
            ineq_rows.append(row)
            ineq_b.append(con.rhs)
        else:
            ineq_rows.append(-row)
            ineq_b.append(-con.rhs)
    if eq_rows:
        blocks_a.append(sp.csr_matrix(np.array(eq_rows)))
        blocks_b.append(np.array(eq_b))
        cones.append(("zero", len(eq_rows)))

    for v in program.scalar_variables:
        if v.nonneg:
            row = np.zeros(n)
            row[layout[v.name][0]] = -1.0
            ineq_rows.append(row)
            ineq_b.append(0.0)
    if ineq_rows:
        blocks_a.append(sp.csr_matrix(np.array(ineq_rows)))
        blocks_b.append(np.array(ineq_b))
        cones.append(("nonneg", len(ineq_rows)))

    for v in program.matrix_variables:
        if not v.hermitian_psd:
            continue
        start, m = layout[v.name]
        g = svec(real_embedding(hermitian_basis(m)))  # (m*m, rows)
        a = sp.lil_matrix((g.shape[1], n))
        a[:, start:start + m * m] = -g.T
        blocks_a.append(a.tocsr())
        blocks_b.append(np.zeros(g.shape[1]))
        cones.append(("psd", 2 * m))

    for blk in program.lmi_blocks:
        nb = blk.size
        rows = nb * (2 * nb + 1)
        cols, vals, idx = [], [], []
        dense = {}
        for t in blk.congruences:
            start, m = layout[t.var]
            left = np.asarray(t.left)
            img = np.einsum("ab,kbc,dc->kad", left, hermitian_basis(m), left.conj())
            g = t.coef * svec(real_embedding(img))  # (m*m, rows)
            block = dense.setdefault(t.var, np.zeros((rows, m * m)))
            block += g.T
        for name, s in blk.scalar_terms:
            block = dense.setdefault(name, np.zeros((rows, 1)))
            block[:, 0] += svec(real_embedding(np.asarray(s)))
        a = sp.lil_matrix((rows, n))
        for var, block in dense.items():
            start, m = layout[var]
            width = m * m if m else 1
            a[:, start:start + width] = -block
        blocks_a.append(a.tocsr())
        blocks_b.append(svec(real_embedding(blk.constant)))
        cones.append(("psd", 2 * nb))

    if blocks_a:
        A = sp.vstack(blocks_a).tocsc()
        b = np.concatenate(blocks_b)
    else:
        A = sp.csc_matrix((0, n))
        b = np.zeros(0)
    A.eliminate_zeros()
    c, offset = objective_vector(program, layout)
    return StandardForm(c, A, b, cones, offset, layout)


def recover(program, form: StandardForm, x):
    """Map a real solution vector back to complex matrices and scalars."""
    matrices, scalars = {}, {}
    for v in program.matrix_variables:
        start, m = form.layout[v.name]
        matrices[v.name] = params_to_hermitian(x[start:start + m * m], m)
    for v in program.scalar_variables:
        scalars[v.name] = float(x[form.layout[v.name][0]])
    return matrices, scalars


# ---------------------------------------------------------------------------
# adapters


class ClarabelAdapter:
    """Interior-point solve of a :class:`StandardForm` with Clarabel.

    ``attempts`` is a ladder of ``(linear solver, extra settings)`` pairs;
    a later rung only runs when the previous one ended in a numerical
    failure.
    """

    _SOLVED = {"Solved", "AlmostSolved"}
    _INFEASIBLE = {"PrimalInfeasible", "AlmostPrimalInfeasible"}

    DEFAULT_ATTEMPTS = (
        ("faer", {}),
        ("faer", {"static_regularization_constant": 1e-7}),
        ("faer", {"equilibrate_enable": False}),
        ("qdldl", {}),
    )

    def __init__(self, max_iter=200, verbose=False, attempts=DEFAULT_ATTEMPTS):
        self.max_iter = max_iter
        self.verbose = verbose
        self.attempts = tuple(attempts)

    def _run(self, form, tolerance, linear_solver, extra):
        import clarabel

        cones = []
        for kind, dim in form.cones:
            if kind == "zero":
                cones.append(clarabel.ZeroConeT(dim))
            elif kind == "nonneg":
                cones.append(clarabel.NonnegativeConeT(dim))
            else:
                cones.append(clarabel.PSDTriangleConeT(dim))
        settings = clarabel.DefaultSettings()
        settings.verbose = self.verbose
        settings.max_iter = self.max_iter
        settings.tol_gap_abs = tolerance
        settings.tol_gap_rel = tolerance
        settings.tol_feas = min(tolerance, 1e-8)
        try:
            settings.direct_solve_method = linear_solver
        except (AttributeError, ValueError):  # builds without this backend
            pass
        for key, val in extra.items():
            setattr(settings, key, val)
        n = form.n_variables
        P = sp.csc_matrix((n, n))
        t0 = time.perf_counter()
        sol = clarabel.DefaultSolver(P, form.c, form.A, form.b, cones, settings).solve()
        elapsed = time.perf_counter() - t0
        name = str(sol.status)
        if name in self._SOLVED:
            status = OPTIMAL
        elif name in self._INFEASIBLE:
            status = INFEASIBLE
        else:
            status = NUMERICAL_FAILURE
        return RawResult(np.asarray(sol.x), np.asarray(sol.z), status, sol.iterations,
                         sol.obj_val + form.offset, sol.obj_val_dual + form.offset, elapsed)

    def solve(self, form: StandardForm, tolerance=DEFAULT_TOLERANCE) -> RawResult:
        elapsed, iters = 0.0, 0
        for backend, extra in self.attempts:
            raw = self._run(form, tolerance, backend, extra)
            elapsed += raw.solve_time
            iters += raw.iterations
            if raw.status != NUMERICAL_FAILURE:
                break
        raw.solve_time, raw.iterations = elapsed, iters
        return raw


@dataclass
class ConicSolution:
    matrix_values: dict
    scalar_values: dict
    objective_value: float
    status: str
    solver_iterations: int
    dual_objective: float = float("nan")
    solve_time: float = 0.0
    message: str = ""

    @property
    def optimal(self):
        return self.status == OPTIMAL


def feasibility_report(program: ConicProgram, matrices, scalars):
    """Worst relative violation of every constraint class, computed afresh."""
    worst = {"psd": 0.0, "lmi": 0.0, "linear": 0.0, "sign": 0.0}
    for v in program.matrix_variables:
        if not v.hermitian_psd:
            continue
        x = matrices[v.name]
        lam = np.linalg.eigvalsh((x + x.conj().T) / 2)
        worst["psd"] = max(worst["psd"], -lam[0] / max(1.0, abs(lam[-1])))
    for blk in program.lmi_blocks:
        y = blk.evaluate(matrices, scalars)
        lam = np.linalg.eigvalsh((y + y.conj().T) / 2)
        worst["lmi"] = max(worst["lmi"], -lam[0] / max(1.0, np.max(np.abs(lam))))
    for con in program.linear_constraints:
        worst["linear"] = max(worst["linear"],
                              con.violation(matrices, scalars) / max(1.0, abs(con.rhs)))
    for v in program.scalar_variables:
        if v.nonneg:
            worst["sign"] = max(worst["sign"], -scalars[v.name])
    return worst


def solve(program: ConicProgram, tolerance=DEFAULT_TOLERANCE, adapter=None, compiled=None,
          feasibility_tol=FEASIBILITY_TOLERANCE) -> ConicSolution:
    """Solve ``program`` and independently re-check feasibility.

    ``compiled`` may carry a :class:`StandardForm` of a program with the same
    constraints; only its objective is refreshed.  Infeasibility and solver
    trouble come back as a status, never as an exception.
    """
    if not program.matrix_variables and not program.scalar_variables:
        if program.lmi_blocks or program.linear_constraints:
            ok = all(np.linalg.eigvalsh(b.constant)[0] >= -feasibility_tol for b in program.lmi_blocks) \
                and all(c.violation({}, {}) <= feasibility_tol for c in program.linear_constraints)
            status = OPTIMAL if ok else INFEASIBLE
        else:
            status = OPTIMAL
        return ConicSolution({}, {}, program.objective.constant, status, 0, program.objective.constant)

    if compiled is None:
        form = compile_program(program)
    else:
        c, offset = objective_vector(program, compiled.layout)
        form = replace(compiled, c=c, offset=offset)
    adapter = adapter or ClarabelAdapter()
    try:
        raw = adapter.solve(form, tolerance)
    except Exception as exc:  # solver crashes are reported, not raised
        return ConicSolution({}, {}, float("nan"), NUMERICAL_FAILURE, 0, message=str(exc))

    if raw.status == INFEASIBLE:
        return ConicSolution({}, {}, float("inf"), INFEASIBLE, raw.iterations,
                             solve_time=raw.solve_time)
    if raw.x is None or not np.all(np.isfinite(raw.x)):
        return ConicSolution({}, {}, float("nan"), NUMERICAL_FAILURE, raw.iterations,
                             solve_time=raw.solve_time, message="non-finite solution")
    matrices, scalars = recover(program, form, raw.x)
    objective = program.objective.evaluate(matrices, scalars)
    status, message = raw.status, ""
    if status == OPTIMAL:
        worst = feasibility_report(program, matrices, scalars)
        bad = {k: v for k, v in worst.items() if v > feasibility_tol}
        if bad:
            status = NUMERICAL_FAILURE
            message = "post-check violations: " + ", ".join(f"{k}={v:.2e}" for k, v in bad.items())
    return ConicSolution(matrices, scalars, objective, status, raw.iterations,
                         raw.dual_objective, raw.solve_time, message)


def solve_complex_cvxpy(program: ConicProgram, tolerance=DEFAULT_TOLERANCE, solver="CLARABEL"):
    """Reference route through cvxpy's native complex Hermitian variables.

    Independent of :func:`compile_program`; used to cross-check the
    realification.  Requires the optional ``cvxpy`` dependency.
    """
    import cvxpy as cp

    mv = {v.name: cp.Variable((v.dim, v.dim), hermitian=True, name=v.name)
          for v in program.matrix_variables}
    sv = {v.name: cp.Variable(name=v.name) for v in program.scalar_variables}
    cons = [mv[v.name] >> 0 for v in program.matrix_variables if v.hermitian_psd]
    cons += [sv[v.name] >= 0 for v in program.scalar_variables if v.nonneg]

    def form_expr(form):
        expr = form.constant
        for var, c in form.matrix_terms:
            expr = expr + cp.real(cp.trace(np.asarray(c) @ mv[var]))
        for name, a in form.scalar_terms:
            expr = expr + a * sv[name]
        return expr

    for con in program.linear_constraints:
        lhs = form_expr(con.form)
        cons.append({"<=": lhs <= con.rhs, ">=": lhs >= con.rhs, "==": lhs == con.rhs}[con.sense])
    for blk in program.lmi_blocks:
        expr = blk.constant
        for t in blk.congruences:
            expr = expr + t.coef * (t.left @ mv[t.var] @ t.left.conj().T)
        for name, s in blk.scalar_terms:
            expr = expr + sv[name] * s
        expr = (expr + expr.H) / 2
        cons.append(expr >> 0)
    prob = cp.Problem(cp.Minimize(form_expr(program.objective)), cons)
    prob.solve(solver=solver)
    if prob.status in ("infeasible", "infeasible_inaccurate"):
        return ConicSolution({}, {}, float("inf"), INFEASIBLE, 0)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return ConicSolution({}, {}, float("nan"), NUMERICAL_FAILURE, 0, message=prob.status)
    matrices = {k: np.asarray(v.value) for k, v in mv.items()}
    scalars = {k: float(v.value) for k, v in sv.items()}
    return ConicSolution(matrices, scalars, float(prob.value), OPTIMAL,
                         prob.solver_stats.num_iters or 0)
