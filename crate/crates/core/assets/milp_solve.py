#!/usr/bin/env python3
"""Solve a 0/1 CPLEX-LP model with HiGHS (through scipy.optimize.milp).

Usage: milp_solve.py LP_PATH SOL_PATH [--time-limit SECONDS] [--seed N]

Writes a solution file:

    OPTIMAL | FEASIBLE | INFEASIBLE | UNBOUNDED | LIMIT
    objective <value>
    work <branch-and-bound nodes>
    <name> <value>
    ...

Exit codes: 0 solution file written (any status), 1 usage or LP parse
error, 2 solver failure.
"""

import argparse
import re
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

SECTION_RE = re.compile(
    r"^\s*(minimize|minimise|min|maximize|maximise|max|subject\s+to|such\s+that|st|s\.t\.|"
    r"bounds|binaries|binary|bin|generals|general|gen|end)\s*$",
    re.IGNORECASE,
)
TOKEN_RE = re.compile(
    r"\s*(?:(<=|=<|>=|=>|=|<|>)|([+-])|(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|([A-Za-z_][A-Za-z0-9_.\[\]]*)\s*(:)?|(\S))"
)
INF = float("inf")


class LpError(Exception):
    pass


def tokenize(text):
    tokens = []
    for m in TOKEN_RE.finditer(text):
        rel, sign, num, name, colon, junk = m.groups()
        if rel:
            tokens.append(("rel", {"=<": "<=", "<": "<=", "=>": ">=", ">": ">="}.get(rel, rel)))
        elif sign:
            tokens.append(("sign", sign))
        elif num:
            tokens.append(("num", float(num)))
        elif name and colon:
            tokens.append(("label", name))
        elif name:
            tokens.append(("name", name))
        elif junk:
            raise LpError("unexpected character %r" % junk)
    return tokens


def parse_expr(tokens, i):
    """Parse `[+|-] [coef] var ...` up to a relation or label. Returns
    (terms, constant, next index)."""
    terms, constant = {}, 0.0
    sign, coef = 1.0, None
    while i < len(tokens) and tokens[i][0] not in ("rel", "label"):
        kind, val = tokens[i]
        if kind == "sign":
            if coef is not None:
                constant += sign * coef
                coef = None
                sign = 1.0
            sign *= -1.0 if val == "-" else 1.0
        elif kind == "num":
            if coef is not None:
                raise LpError("two numbers in a row")
            coef = val
        else:
            terms[val] = terms.get(val, 0.0) + sign * (1.0 if coef is None else coef)
            sign, coef = 1.0, None
        i += 1
    if coef is not None:
        constant += sign * coef
    return terms, constant, i


def parse_lp(text):
    sections = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0]
        m = SECTION_RE.match(line)
        if m:
            word = re.sub(r"\s+", " ", m.group(1).lower())
            current = {
                "minimize": "min", "minimise": "min", "min": "min",
                "maximize": "max", "maximise": "max", "max": "max",
                "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
                "bounds": "bounds", "binaries": "bin", "binary": "bin", "bin": "bin",
                "generals": "gen", "general": "gen", "gen": "gen", "end": "end",
            }[word]
            sections.setdefault(current, [])
            continue
        if current is None:
            if line.strip():
                raise LpError("content before the objective section")
            continue
        sections[current].append(line)

    if "min" in sections and "max" in sections:
        raise LpError("both Minimize and Maximize present")
    sense = "max" if "max" in sections else "min"
    obj_tokens = tokenize("\n".join(sections.get(sense, [])))
    if obj_tokens and obj_tokens[0][0] == "label":
        obj_tokens = obj_tokens[1:]
    obj_terms, obj_const, end = parse_expr(obj_tokens, 0)
    if end != len(obj_tokens):
        raise LpError("relation in objective")

    rows = []
    tokens = tokenize("\n".join(sections.get("st", [])))
    i = 0
    while i < len(tokens):
        name = None
        if tokens[i][0] == "label":
            name = tokens[i][1]
            i += 1
        terms, const, i = parse_expr(tokens, i)
        if i >= len(tokens) or tokens[i][0] != "rel":
            raise LpError("constraint %s lacks a relation" % name)
        rel = tokens[i][1]
        i += 1
        rsign = 1.0
        if i < len(tokens) and tokens[i][0] == "sign":
            rsign = -1.0 if tokens[i][1] == "-" else 1.0
            i += 1
        if i >= len(tokens) or tokens[i][0] != "num":
            raise LpError("constraint %s lacks a right-hand side" % name)
        rhs = rsign * tokens[i][1] - const
        i += 1
        rows.append((terms, rel, rhs))

    order = []
    seen = set()

    def declare(v):
        if v not in seen:
            seen.add(v)
            order.append(v)

    for v in obj_terms:
        declare(v)
    for terms, _, _ in rows:
        for v in terms:
            declare(v)

    lb, ub = {}, {}
    for line in sections.get("bounds", []):
        toks = tokenize(line)
        if not toks:
            continue
        vals = [t for t in toks]
        if len(vals) == 2 and vals[0][0] == "name" and vals[1] == ("name", "free"):
            declare(vals[0][1])
            lb[vals[0][1]], ub[vals[0][1]] = -INF, INF
            continue
        # forms: l <= v <= u | v <= u | v >= l | v = c
        nums, var, rels = [], None, []
        j = 0
        while j < len(vals):
            kind, val = vals[j]
            if kind == "sign":
                s = -1.0 if val == "-" else 1.0
                j += 1
                if j < len(vals) and vals[j][0] == "name" and vals[j][1].lower() in ("inf", "infinity"):
                    nums.append(s * INF)
                else:
                    nums.append(s * vals[j][1])
            elif kind == "num":
                nums.append(val)
            elif kind == "name" and val.lower() in ("inf", "infinity"):
                nums.append(INF)
            elif kind == "name":
                var = val
                nums.append(None)
            elif kind == "rel":
                rels.append(val)
            j += 1
        if var is None:
            raise LpError("bad bound line %r" % line)
        declare(var)
        k = nums.index(None)
        if len(nums) == 3 and k == 1:
            lb[var], ub[var] = nums[0], nums[2]
        elif len(nums) == 2 and k == 0:
            if rels[0] == "<=":
                ub[var] = nums[1]
            elif rels[0] == ">=":
                lb[var] = nums[1]
            else:
                lb[var] = ub[var] = nums[1]
        elif len(nums) == 2 and k == 1:
            if rels[0] == "<=":
                lb[var] = nums[0]
            elif rels[0] == ">=":
                ub[var] = nums[0]
            else:
                lb[var] = ub[var] = nums[0]
        else:
            raise LpError("bad bound line %r" % line)

    integer = set()
    for key in ("bin", "gen"):
        for line in sections.get(key, []):
            for kind, val in tokenize(line):
                if kind != "name":
                    raise LpError("bad integer section entry %r" % (val,))
                declare(val)
                integer.add(val)
                if key == "bin":
                    lb[val] = max(lb.get(val, 0.0), 0.0)
                    ub[val] = min(ub.get(val, 1.0), 1.0)

    return {
        "sense": sense,
        "obj": obj_terms,
        "obj_const": obj_const,
        "rows": rows,
        "vars": order,
        "lb": lb,
        "ub": ub,
        "integer": integer,
    }


def solve(model, time_limit):
    names = model["vars"]
    col = {v: k for k, v in enumerate(names)}
    nvar = len(names)
    sign = -1.0 if model["sense"] == "max" else 1.0
    if nvar == 0:
        for terms, rel, rhs in model["rows"]:
            ok = {"<=": 0.0 <= rhs, ">=": 0.0 >= rhs, "=": rhs == 0.0}[rel]
            if not ok:
                return "INFEASIBLE", None, None, 0
        return "OPTIMAL", model["obj_const"], np.zeros(0), 0

    c = np.zeros(nvar)
    for v, coef in model["obj"].items():
        c[col[v]] = sign * coef
    lb = np.array([model["lb"].get(v, 0.0) for v in names])
    ub = np.array([model["ub"].get(v, INF) for v in names])
    integrality = np.array([1 if v in model["integer"] else 0 for v in names])

    constraints = None
    if model["rows"]:
        r, cc, data, rl, ru = [], [], [], [], []
        for k, (terms, rel, rhs) in enumerate(model["rows"]):
            for v, coef in terms.items():
                r.append(k)
                cc.append(col[v])
                data.append(coef)
            rl.append(rhs if rel in (">=", "=") else -INF)
            ru.append(rhs if rel in ("<=", "=") else INF)
        a = coo_matrix((data, (r, cc)), shape=(len(model["rows"]), nvar)).tocsr()
        constraints = LinearConstraint(a, np.array(rl), np.array(ru))

    def valid(x):
        tol = 1e-6
        if np.any(x < lb - tol) or np.any(x > ub + tol):
            return False
        if np.any(np.abs(x[integrality == 1] - np.round(x[integrality == 1])) > tol):
            return False
        if constraints is None:
            return True
        ax = constraints.A @ x
        return bool(np.all(ax >= constraints.lb - tol) and np.all(ax <= constraints.ub + tol))

    options = {"disp": False, "mip_rel_gap": 0.0}
    if time_limit is not None:
        options["time_limit"] = time_limit
    res = milp(c, integrality=integrality, bounds=Bounds(lb, ub), constraints=constraints, options=options)
    if res.x is not None and not valid(res.x):
        # some HiGHS releases return points violating the model after presolve
        options["presolve"] = False
        res = milp(c, integrality=integrality, bounds=Bounds(lb, ub), constraints=constraints, options=options)
        if res.x is not None and not valid(res.x):
            raise RuntimeError("solver returned a point that violates the model")
    nodes = getattr(res, "mip_node_count", None)
    if res.status == 0:
        status = "OPTIMAL"
    elif res.status == 1:
        status = "FEASIBLE" if res.x is not None else "LIMIT"
    elif res.status == 2:
        status = "INFEASIBLE"
    elif res.status == 3:
        status = "UNBOUNDED"
    else:
        raise RuntimeError(res.message)
    if res.x is None or status in ("INFEASIBLE", "UNBOUNDED", "LIMIT"):
        return status, None, None, nodes
    objective = float(np.dot(c, res.x)) * sign + model["obj_const"]
    return status, objective, res.x, nodes


def main(argv):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("lp_path")
    parser.add_argument("sol_path")
    parser.add_argument("--time-limit", type=float, default=None)
    parser.add_argument("--seed", type=int, default=0, help="accepted for interface compatibility")
    args = parser.parse_args(argv)

    try:
        with open(args.lp_path) as f:
            model = parse_lp(f.read())
    except (OSError, LpError, ValueError) as e:
        print("milp_solve: %s" % e, file=sys.stderr)
        return 1
    try:
        status, objective, x, nodes = solve(model, args.time_limit)
    except Exception as e:  # solver failure
        print("milp_solve: solver failed: %s" % e, file=sys.stderr)
        return 2

    out = [status]
    if objective is not None:
        out.append("objective %.12g" % objective)
    if nodes is not None:
        out.append("work %d" % nodes)
    if x is not None:
        for name, value in zip(model["vars"], x):
            out.append("%s %.12g" % (name, value))
    with open(args.sol_path, "w") as f:
        f.write("\n".join(out) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
