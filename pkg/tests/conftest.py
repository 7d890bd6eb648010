import pytest
import torch

from fakes import FakeRigidBody
from fvin.envs.truth import TruthPendulumModel, TruthQuadrotorModel


@pytest.fixture(autouse=True)
def app_dir(tmp_path, monkeypatch):
    path = tmp_path / "liefvin-home"
    monkeypatch.setenv("LIEFVIN_DIR", str(path))
    return path


@pytest.fixture
def generator() -> torch.Generator:
    return torch.Generator().manual_seed(1234)


@pytest.fixture
def fake_body() -> FakeRigidBody:
    return FakeRigidBody()


@pytest.fixture
def pendulum_truth() -> TruthPendulumModel:
    return TruthPendulumModel(h=0.02)


@pytest.fixture
def quadrotor_truth() -> TruthQuadrotorModel:
    return TruthQuadrotorModel(h=0.02)
