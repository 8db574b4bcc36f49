"""Hypothesis generators for small loop-free array programs."""

from hypothesis import strategies as st

IDX = ["x", "y", "0", "1", "x + 1"]
VAL = ["x", "y", "0", "1", "a[x]", "a[y]", "x + y"]


def statements(depth=2):
    leaf = st.one_of(
        st.builds(lambda i, v: f"a[{i}] = {v};", st.sampled_from(IDX), st.sampled_from(VAL)),
        st.builds(lambda t, v: f"{t} = {v};", st.sampled_from(["x", "y"]), st.sampled_from(VAL)),
        st.builds(lambda u, v: f"assume({u} <= {v});", st.sampled_from(VAL), st.sampled_from(VAL)),
    )
    if depth == 0:
        return leaf
    inner = st.lists(statements(depth - 1), min_size=1, max_size=3).map(" ".join)
    cond = st.builds(lambda u, op, v: f"{u} {op} {v}", st.sampled_from(VAL),
                     st.sampled_from(["<", "==", "!="]), st.sampled_from(VAL))
    branch = st.builds(lambda c, t, e: f"if ({c}) {{ {t} }} else {{ {e} }}", cond, inner, inner)
    return st.one_of(leaf, branch)


def programs(max_stmts=4):
    return st.lists(statements(), min_size=1, max_size=max_stmts).map(
        lambda body: "int x, y, n; int a[n]; " + " ".join(body) + " end: assert x >= 0;")
