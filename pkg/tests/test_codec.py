import json

import pytest

from ellbranch import (
    PSD,
    Affine,
    AllMatrices,
    BranchMap,
    Constant,
    ConstantMap,
    DirichletProblem,
    DualMap,
    DualPSD,
    DualSet,
    HalfSpaceLinear,
    KthEigenvalue,
    LinearTrace,
    MatrixField,
    MongeAmpere,
    Norm,
    PerturbedMA,
    Pk,
    PucciMinus,
    SublevelBranch,
    SymMat,
    Translate,
    TranslatedMap,
    Truncated,
    TruncatedLinear,
    branch_from_dict,
    load_document,
    map_from_dict,
    operator_from_dict,
    problem_from_dict,
    set_from_dict,
)
from ellbranch._codec import decode, sampler_from_dict
from ellbranch._exceptions import ConfigException

from . import CONFIGS_PATH

A_FIELD = MatrixField(
    SymMat.identity(2), ((Affine(slope=(0.5, 0.0)), SymMat.diag([1.0, 0.0])),)
)


@pytest.mark.parametrize(
    "S",
    (
        PSD(),
        DualPSD(tol=1e-6),
        Pk(2, 3),
        HalfSpaceLinear(SymMat.identity(2), 1.5),
        AllMatrices(),
        Translate(PSD(), SymMat.diag([1.0, -1.0])),
        Truncated(PSD(), HalfSpaceLinear(SymMat.identity(2), 1.0)),
        DualSet(Pk(1, 2), 1e-3),
        SublevelBranch(MongeAmpere(2, Norm()), (0.5, 0.0), PSD()),
    ),
    ids=lambda S: S.kind,
)
def test_sets_decode_their_descriptors(S):
    assert set_from_dict(json.loads(json.dumps(S.to_dict()))) == S


@pytest.mark.parametrize(
    "op",
    (
        MongeAmpere(2, Constant(1.0)),
        PerturbedMA(MatrixField(SymMat.identity(2) * 0.5)),
        KthEigenvalue(1, 3, Norm(scale=2.0)),
        PucciMinus(0.5, 2.0, 2),
        LinearTrace(A_FIELD, Constant(1.0)),
        TruncatedLinear(A_FIELD, 1.0, 2.0, 5.0, Constant(1.0)),
    ),
    ids=lambda op: op.kind,
)
def test_operators_decode_their_descriptors(op):
    assert operator_from_dict(json.loads(json.dumps(op.to_dict()))) == op


@pytest.mark.parametrize(
    ("data", "message"),
    (
        ({"kind": "Cone"}, "unknown kind 'Cone'"),
        ({}, "unknown kind None"),
        ({"kind": "PSD", "radius": 1}, r"unknown keys \['radius'\]"),
        ({"kind": "Pk", "k": 1}, "missing key 'dim'"),
    ),
)
def test_invalid_set_descriptors(data, message):
    with pytest.raises(ConfigException, match=message):
        set_from_dict(data)


def test_invalid_operator_descriptors():
    with pytest.raises(ConfigException, match="expected one of"):
        operator_from_dict({"kind": "Laplace"})
    with pytest.raises(ConfigException, match="unknown keys"):
        operator_from_dict({"kind": "MongeAmpere", "dim": 2, "g": 1})


def test_maps_decode_their_descriptors(unit_disk):
    maps = (
        ConstantMap(unit_disk, PSD()),
        TranslatedMap(unit_disk, PSD(), A_FIELD),
        BranchMap(unit_disk, MongeAmpere(2), ConstantMap(unit_disk, PSD())),
        DualMap(unit_disk, ConstantMap(unit_disk, Pk(1, 2)), 1e-3),
    )
    for M in maps:
        assert map_from_dict(M.to_dict()) == M


def test_branch_maps_default_to_the_natural_constraint(unit_disk):
    M = map_from_dict(
        {
            "kind": "branch",
            "operator": {"kind": "KthEigenvalue", "k": 1, "dim": 2},
        },
        unit_disk,
    )
    assert M.constraint == ConstantMap(unit_disk, AllMatrices())


def test_maps_need_a_domain():
    with pytest.raises(ConfigException, match="domain"):
        map_from_dict({"kind": "constant", "set": {"kind": "PSD"}})


def test_branch_from_dict():
    branch = branch_from_dict(
        {
            "domain": {"shape": "ball", "center": [0.0, 0.0], "radius": 1.0},
            "operator": {"kind": "MongeAmpere", "dim": 2},
        }
    )
    assert branch.constraint.theta == PSD()
    assert branch.to_dict()["operator"] == {
        "kind": "MongeAmpere",
        "dim": 2,
        "f": Constant(0.0).to_dict(),
    }


def test_sampler_from_dict():
    sampler = sampler_from_dict({"count": 64}, count=10, cap=5.0)
    assert sampler.count == 64
    assert sampler.cap == 5.0
    with pytest.raises(ConfigException, match="sampler"):
        sampler_from_dict({"samples": 3})


@pytest.mark.parametrize(
    "name",
    (
        "ma_disk",
        "affine_lambda_k",
        "perturbed_ma",
    ),
)
def test_shipped_problems_decode(name):
    problem = problem_from_dict(load_document(CONFIGS_PATH / f"{name}.toml"))
    assert isinstance(problem, DirichletProblem)
    assert problem.reference is not None


def test_check_documents_decode_a_branch():
    document = load_document(CONFIGS_PATH / "truncated_linear.toml")
    branch = branch_from_dict(document)
    assert isinstance(branch.operator, TruncatedLinear)
    assert branch.constraint.theta == AllMatrices()
    assert document["check"] == {"eps": 0.1, "delta": 0.05}


def test_problem_settings():
    document = load_document(CONFIGS_PATH / "ma_disk.toml")
    problem = problem_from_dict(document)

    assert problem.h == 0.03125
    assert problem.tol == 1e-9
    assert problem.boundary_values == "projection"
    assert document["solver"]["h_ladder"] == [0.125, 0.0625, 0.03125]


@pytest.mark.parametrize(
    ("change", "message"),
    (
        (lambda d: d.pop("boundary"), r"missing table \[boundary\]"),
        (lambda d: d["solver"].pop("h"), "missing key 'h'"),
        (lambda d: d["solver"].update(speed=2), "unknown keys"),
    ),
)
def test_invalid_problems(change, message):
    document = load_document(CONFIGS_PATH / "ma_disk.toml")
    change(document)
    with pytest.raises(ConfigException, match=message):
        problem_from_dict(document)


def test_decode_names_the_source():
    with pytest.raises(ConfigException, match="problem.toml"):
        decode(set_from_dict, {"kind": "Pk", "k": 5, "dim": 2}, "problem.toml")
    with pytest.raises(ConfigException, match="problem.toml"):
        decode(
            set_from_dict,
            {"kind": "HalfSpaceLinear", "a": "x"},
            "problem.toml",
        )


def test_load_json_document(tmp_path):
    path = tmp_path / "set.json"
    path.write_text(
        json.dumps({"map": {"kind": "constant"}}), encoding="utf-8"
    )
    assert load_document(path) == {"map": {"kind": "constant"}}


@pytest.mark.parametrize(
    ("name", "content", "message"),
    (
        ("problem.yaml", "", "expected a .toml or .json"),
        ("problem.toml", "[domain\n", "problem.toml"),
        ("problem.json", "[1, 2]", "top level must be a table"),
        ("problem.toml", "[plot]\nx = 1\n", r"unknown tables \['plot'\]"),
    ),
)
def test_invalid_documents(tmp_path, name, content, message):
    path = tmp_path / name
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigException, match=message):
        load_document(path)


def test_missing_document(tmp_path):
    with pytest.raises(ConfigException, match="missing.toml"):
        load_document(tmp_path / "missing.toml")
