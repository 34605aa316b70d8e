"""
Pytest configuration and fixtures for testing.
"""
import pytest
from fastapi.testclient import TestClient

from apps.curves_db.schemas.curves import HyperParamAxis
from apps.curves_db.services.curves_db_service import CurvesDbService
from apps.svr.schemas.svr import KernelSpec, SvrHyper
from apps.svr.services.svr_service import SvrService
from apps.trainers.schemas.trainer_specs import SyntheticSurface
from apps.trainers.services.synthetic import SyntheticTrainer


@pytest.fixture(scope="session")
def small_axes():
    """4 learning rates x 2 batch sizes x 2 optimizers (16 settings)."""
    return [
        HyperParamAxis(name="learning_rate", kind="real", values=(0.0001, 0.001, 0.01, 0.1)),
        HyperParamAxis(name="batch_size", kind="integer", values=(16, 32)),
        HyperParamAxis(name="optimizer", kind="categorical", values=("sgd", "adam")),
    ]


@pytest.fixture(scope="session")
def surface(small_axes):
    return SyntheticSurface.generate(small_axes, seed=0, noise=0.0)


@pytest.fixture(scope="session")
def synthetic_trainer(surface):
    return SyntheticTrainer(surface)


@pytest.fixture(scope="session")
def curves_db(small_axes, synthetic_trainer):
    """Every setting of the small grid, fully trained for 30 epochs."""
    grid = CurvesDbService.enumerate_grid(small_axes)
    return CurvesDbService.build_database(small_axes, grid, synthetic_trainer, fin_epoch=30, seed=0)


@pytest.fixture(scope="session")
def trained_model(curves_db):
    """Gaussian SVR on the first three accuracies of every record."""
    X, y = CurvesDbService.feature_matrix(curves_db, 3)
    return SvrService.train_svr(X, y, KernelSpec(kind="gaussian"), SvrHyper())


@pytest.fixture(scope="function")
def client(trained_model):
    """Create a test client with the model dependency overridden."""
    # Import here so settings are read at test time
    from apps.main import app
    from apps.predictor.api.dependencies import get_model

    app.dependency_overrides[get_model] = lambda: trained_model

    with TestClient(app) as test_client:
        yield test_client

    app.dependency_overrides.clear()
