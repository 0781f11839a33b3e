"""Kind and type assignment, program checking, skeleton invariants."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from generators import (
    ORACLE_SOURCE,
    gen_closed_con,
    gen_closed_term,
    gen_kind,
    signature,
)
from olam import surface
from olam.checker import (
    Environment,
    check_kind,
    check_program,
    check_type,
    connective_skeleton,
    infer_kind,
    infer_type,
)
from olam.errors import CheckError, OracleError
from olam.syntax import (
    Bottom,
    Choice,
    ChoiceType,
    Conj,
    Force,
    Hole,
    KindPi,
    MergeTerm,
    OpaqueType,
    Star,
    TraceTerm,
    TypeApp,
    TypeName,
    Var,
    alpha_eq,
)


SIGNATURE_PREFIX = """\
atom A : *
atom B : *
atom a : A
atom b : A
atom q : B
atom g : A -> A
atom h : A -> B
atom P : pi x:A. *
atom u : forall x:A. P x
use c
use d
"""

ORACLE_DEFS = surface.parse_oracle_file(ORACLE_SOURCE)


def env_and_registry():
    return signature()


def test_check_kind_star_and_pi():
    env, reg = env_and_registry()
    check_kind(env, Star())
    check_kind(env, surface.parse_kind("pi x:A. *"), registry=reg)


def test_check_kind_rejects_nonstar_annotation():
    env, _ = env_and_registry()
    bad = KindPi("x", TypeName("P"), Star())
    with pytest.raises(CheckError) as e:
        check_kind(env, bad)
    assert e.value.code == "KindMismatch"


def test_infer_kind_atoms():
    env, _ = env_and_registry()
    assert infer_kind(env, TypeName("A")) == Star()
    assert infer_kind(env, Bottom()) == Star()
    assert infer_kind(env, TypeName("P")) == KindPi("x", TypeName("A"), Star())


def test_infer_kind_unbound_atom():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_kind(env, TypeName("Z"))
    assert e.value.code == "UnboundConVar"


def test_infer_kind_type_application():
    env, _ = env_and_registry()
    assert infer_kind(env, surface.parse_type("P a")) == Star()


def test_infer_kind_type_application_wrong_argument():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_kind(env, TypeApp(TypeName("P"), Var("q")))
    assert e.value.code == "TypeMismatch"


def test_infer_kind_application_of_star():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_kind(env, TypeApp(TypeName("A"), Var("a")))
    assert e.value.code == "NotAKindFunction"


def test_infer_kind_abstraction():
    env, _ = env_and_registry()
    k = infer_kind(env, surface.parse_type("\\\\x:A. P x"))
    assert k == KindPi("x", TypeName("A"), Star())


def test_infer_kind_connectives():
    env, _ = env_and_registry()
    for src in ("Oplus A", "Sigma B", "A /\\ B", "forall x:A. P x"):
        assert infer_kind(env, surface.parse_type(src)) == Star()


def test_infer_type_atoms_and_vars():
    env, _ = env_and_registry()
    assert infer_type(env, Var("a")) == TypeName("A")
    assert infer_type(env, Var("g")) == surface.parse_type("A -> A")
    with pytest.raises(CheckError) as e:
        infer_type(env, Var("zz"))
    assert e.value.code == "UnboundVar"


def test_infer_type_application():
    env, _ = env_and_registry()
    assert infer_type(env, surface.parse_term("g a")) == TypeName("A")
    assert infer_type(env, surface.parse_term("h (g a)")) == TypeName("B")


def test_infer_type_dependent_application():
    env, _ = env_and_registry()
    assert infer_type(env, surface.parse_term("u a")) == surface.parse_type(
        "P a"
    )
    assert infer_type(env, surface.parse_term("u (g b)")) == surface.parse_type(
        "P (g b)"
    )


def test_infer_type_application_errors():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_type(env, surface.parse_term("a b"))
    assert e.value.code == "NotAFunction"
    with pytest.raises(CheckError) as e:
        infer_type(env, surface.parse_term("g q"))
    assert e.value.code == "TypeMismatch"


def test_infer_type_lambda():
    env, _ = env_and_registry()
    t = surface.parse_term("\\x:A. h x")
    assert alpha_eq(infer_type(env, t), surface.parse_type("A -> B"))


def test_infer_type_lambda_shadowing_renames():
    env, _ = env_and_registry()
    # binder reuses the signature name a; the result binder is renamed
    t = surface.parse_term("\\a:B. a")
    ty = infer_type(env, t)
    assert alpha_eq(ty, surface.parse_type("B -> B"))


def test_infer_type_lambda_normalizes_annotation():
    env, _ = env_and_registry()
    t = surface.parse_term("\\x:(\\\\y:A. A) a. x")
    assert alpha_eq(infer_type(env, t), surface.parse_type("A -> A"))


def test_infer_type_choice():
    env, _ = env_and_registry()
    t = surface.parse_term("choose[1/3]{a}{b}")
    assert infer_type(env, t) == ChoiceType(TypeName("A"))


def test_infer_type_choice_branch_mismatch():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_type(env, surface.parse_term("choose[1/2]{a}{q}"))
    assert e.value.code == "BranchTypeMismatch"


def test_infer_type_choice_bad_probability():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_type(env, Choice(Var("a"), Fraction(3, 2), Var("b")))
    assert e.value.code == "ProbabilityOutOfRange"


def test_infer_type_force():
    env, reg = env_and_registry()
    t = surface.parse_term("choose[1/2]{a}{b}!")
    assert infer_type(env, t) == TypeName("A")
    assert infer_type(env, Force(surface.parse_term("#c")), registry=reg) == TypeName("A")


def test_infer_type_force_non_modal():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_type(env, surface.parse_term("a!"))
    assert e.value.code == "NotAChoice"


def test_infer_type_pair_proj():
    env, _ = env_and_registry()
    t = surface.parse_term("<a, q>")
    assert infer_type(env, t) == Conj(TypeName("A"), TypeName("B"))
    assert infer_type(env, surface.parse_term("<a, q>.0")) == TypeName("A")
    assert infer_type(env, surface.parse_term("<a, q>.1")) == TypeName("B")
    with pytest.raises(CheckError) as e:
        infer_type(env, surface.parse_term("a.0"))
    assert e.value.code == "NotAPair"


def test_infer_type_dependent_pair_projection():
    env, _ = env_and_registry()
    t = surface.parse_term("<u a, a>.0")
    assert infer_type(env, t) == surface.parse_type("P a")


def test_infer_type_oracle_forms():
    env, reg = env_and_registry()
    assert infer_type(env, surface.parse_term("#c"), registry=reg) == OpaqueType(
        TypeName("A")
    )
    assert infer_type(env, surface.parse_term("#d b"), registry=reg) == OpaqueType(
        TypeName("A")
    )
    assert infer_type(
        env, surface.parse_term("(#d b)!"), registry=reg
    ) == TypeName("A")


def test_infer_type_oracle_without_registry():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_type(env, surface.parse_term("#c"))
    assert e.value.code == "UnknownOracle"


def test_infer_type_nullary_oracle_applied():
    env, reg = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_type(env, surface.parse_term("#c a"), registry=reg)
    assert e.value.code == "NotAFunction"


def test_infer_type_oracle_argument_checked():
    env, reg = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_type(env, surface.parse_term("#d q"), registry=reg)
    assert e.value.code == "TypeMismatch"


def test_efq_rules():
    env0 = Environment().with_con("A", Star()).with_term("bot", Bottom())
    assert infer_type(env0, surface.parse_term("efq(bot : A)")) == TypeName("A")
    with pytest.raises(CheckError) as e:
        infer_type(env0, surface.parse_term("efq(bot : A -> A)"))
    assert e.value.code == "EfqTargetContainsForall"


def test_efq_on_non_bottom():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_type(env, surface.parse_term("efq(a : A)"))
    assert e.value.code == "EfqOnNonBottom"


def test_evidence_terms_rejected_as_values():
    env, _ = env_and_registry()
    t = TraceTerm((Var("a"),), None)
    with pytest.raises(CheckError) as e:
        infer_type(env, t)
    assert e.value.code == "EvidenceTerm"
    m = MergeTerm(Var("a"), (), Var("a"), Fraction(1))
    with pytest.raises(CheckError) as e:
        infer_type(env, m)
    assert e.value.code == "EvidenceTerm"


def test_holes_rejected_as_values():
    env, _ = env_and_registry()
    with pytest.raises(CheckError) as e:
        infer_type(env, Hole(1))
    assert e.value.code == "HoleInTerm"


def test_check_type_normalizes_expectation():
    env, _ = env_and_registry()
    check_type(env, Var("a"), surface.parse_type("(\\\\x:A. A) b"))
    with pytest.raises(CheckError) as e:
        check_type(env, Var("q"), TypeName("A"))
    assert e.value.code == "TypeMismatch"


def test_environment_duplicates_rejected():
    env = Environment().with_con("A", Star())
    with pytest.raises(CheckError) as e:
        env.with_con("A", Star())
    assert e.value.code == "DuplicateName"
    with pytest.raises(CheckError):
        env.with_term("A", TypeName("A"))


def test_connective_skeleton_shapes():
    env, _ = env_and_registry()
    assert connective_skeleton(TypeName("A")) == ("atom", "A")
    assert connective_skeleton(Bottom()) == ("bottom",)
    assert connective_skeleton(surface.parse_type("P a")) == (
        "apply",
        ("atom", "P"),
    )
    # the embedded term is erased: P a and P (g a) share a skeleton
    assert connective_skeleton(
        surface.parse_type("P a")
    ) == connective_skeleton(surface.parse_type("P (g a)"))
    assert connective_skeleton(surface.parse_type("Oplus A /\\ Sigma B")) == (
        "conj",
        ("choice", ("atom", "A")),
        ("opaque", ("atom", "B")),
    )
    assert connective_skeleton(surface.parse_type("forall x:A. P x")) == (
        "forall",
        ("atom", "A"),
        ("apply", ("atom", "P")),
    )


def test_check_program_inlines_definitions():
    src = SIGNATURE_PREFIX + "f = g a\nmain = g f\n"
    checked = check_program(surface.parse_program(src), ORACLE_DEFS)
    assert checked.def_types["f"] == TypeName("A")
    assert checked.def_types["main"] == TypeName("A")
    assert alpha_eq(checked.main_term, surface.parse_term("g (g a)"))
    assert list(checked.def_types) == ["f", "main"]


def test_check_program_ascription_enforced():
    src = SIGNATURE_PREFIX + "f : B = a\nmain = a\n"
    with pytest.raises(CheckError) as e:
        check_program(surface.parse_program(src), ORACLE_DEFS)
    assert e.value.code == "TypeMismatch"


def test_check_program_requires_main():
    src = SIGNATURE_PREFIX + "f = a\n"
    with pytest.raises(CheckError) as e:
        check_program(surface.parse_program(src), ORACLE_DEFS)
    assert e.value.code == "MissingMain"
    checked = check_program(
        surface.parse_program(src), ORACLE_DEFS, require_main=False
    )
    assert checked.main_term is None


def test_check_program_environment_is_signature_only():
    src = SIGNATURE_PREFIX + "f = a\nmain = f\n"
    checked = check_program(surface.parse_program(src), ORACLE_DEFS)
    assert "f" not in checked.env.term_names()
    assert "a" in checked.env.term_names()


def test_check_program_without_oracles():
    src = "atom A : *\natom a : A\nmain = a\n"
    checked = check_program(surface.parse_program(src), [])
    assert checked.registry.names() == []


def test_check_program_validates_all_oracle_defs():
    # every supplied oracle is validated against the signature, used or not
    src = "atom A : *\natom a : A\nmain = a\n"
    with pytest.raises(OracleError) as e:
        check_program(surface.parse_program(src), ORACLE_DEFS)
    assert e.value.code == "OutputNotClosed"


def test_check_program_unknown_use():
    src = "atom A : *\natom a : A\nuse nosuch\nmain = a\n"
    with pytest.raises(OracleError) as e:
        check_program(surface.parse_program(src), [])
    assert e.value.code == "UnknownOracle"


@given(st.integers(0, 3000))
def test_generated_terms_typecheck(seed):
    env, reg = env_and_registry()
    t = gen_closed_term(seed)
    ty = infer_type(env, t, registry=reg)
    infer_kind(env, ty, registry=reg)


@given(st.integers(0, 2000))
def test_generated_cons_kind_star(seed):
    env, reg = env_and_registry()
    c = gen_closed_con(seed)
    assert infer_kind(env, c, registry=reg) == Star()


@given(st.integers(0, 1000))
def test_generated_kinds_check(seed):
    env, reg = env_and_registry()
    check_kind(env, gen_kind(seed), registry=reg)
