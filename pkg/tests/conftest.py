import numpy as np
import pytest

from facesearch import eigenspace, faceio, gaussmodel


def identity_eigenmodel(k: int, width: int, height: int) -> eigenspace.EigenModel:
    """A trivial eigenmodel whose coordinates ARE the first k pixels."""
    p = width * height
    assert k <= p
    basis = np.eye(p)[:, :k]
    return eigenspace.EigenModel(
        mean_face=np.zeros(p),
        basis=basis,
        eigenvalues=np.ones(k),
        total_variance=float(p),
        width=width,
        height=height,
        n_train=0,
    )


def standard_mvn(k: int) -> gaussmodel.MVNModel:
    return gaussmodel.MVNModel(
        mu=np.zeros(k),
        sigma=np.eye(k),
        marginal_sd=np.ones(k),
        corr=np.eye(k),
        n_train=0,
    )


def coordinate_dataset(coords: np.ndarray, eig: eigenspace.EigenModel) -> faceio.FaceDataset:
    """Wrap coordinate rows as reconstructed faces of the given model."""
    faces = [eigenspace.reconstruct(eig, c) for c in coords]
    return faceio.FaceDataset(faces=faces, ids=[f"f{i}" for i in range(len(faces))])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
