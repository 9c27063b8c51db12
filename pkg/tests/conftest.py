import pytest

from maxbias import GFunction, alpha_quantile, biweight, cauchy_model, gaussian_model
from maxbias.efficiency import LAW_NAMES, avar_table, reference_estimators


@pytest.fixture(scope="session")
def table():
    cells = avar_table(reference_estimators(), LAW_NAMES)
    return {(c.estimator, c.law): c for c in cells}


@pytest.fixture(scope="session")
def gauss():
    return gaussian_model()


@pytest.fixture(scope="session")
def cauchy():
    return cauchy_model()


@pytest.fixture(scope="session")
def gf_biw1_gauss(gauss):
    return GFunction(biweight(1.0), gauss)


@pytest.fixture(scope="session")
def gf_biw156_gauss(gauss):
    return GFunction(biweight(1.56), gauss)


@pytest.fixture(scope="session")
def gf_biw468_gauss(gauss):
    return GFunction(biweight(4.68), gauss)


@pytest.fixture(scope="session")
def gf_step_gauss(gauss):
    return GFunction(alpha_quantile(), gauss)


@pytest.fixture(scope="session")
def gf_biw1_cauchy(cauchy):
    return GFunction(biweight(1.0), cauchy)


@pytest.fixture(scope="session")
def gf_biw156_cauchy(cauchy):
    return GFunction(biweight(1.56), cauchy)


@pytest.fixture(scope="session")
def gf_biw468_cauchy(cauchy):
    return GFunction(biweight(4.68), cauchy)
