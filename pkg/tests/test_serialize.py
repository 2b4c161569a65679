import json

import numpy as np
import pytest

from kerneldr import dimred
from kerneldr.classify import fit_classifier, classifier_predict, platt_fit, svm_probability
from kerneldr.errors import SchemaError
from kerneldr.hsic import LinkSpec
from kerneldr.kernels import KernelSpec
from kerneldr.serialize import load_model, save_model, to_jsonable
from kerneldr.synthdata import SynthSpec, generate


@pytest.fixture(scope="module")
def data():
    return generate(SynthSpec("apple_tart", 30, seed=1))


class TestRoundTrip:
    @pytest.mark.parametrize("method", dimred.METHODS)
    def test_transform_bit_identical(self, tmp_path, data, method):
        P = dimred.fit(method, data.X, data.y, kernel=KernelSpec("rbf", 0.7),
                       link=LinkSpec("indicator"), d=2)
        path = tmp_path / "m.json"
        save_model(path, P)
        Q, clf = load_model(path)
        assert clf is None
        Xn = np.random.default_rng(2).normal(size=(15, data.X.shape[1]))
        assert np.array_equal(P.transform(Xn), Q.transform(Xn))
        assert Q.meta == to_jsonable(P.meta)

    def test_binary_classifier(self, tmp_path, data):
        y = (data.y >= 2).astype(int)
        P = dimred.fit("kpca", data.X, y, kernel=KernelSpec("rbf", 1.0), d=2)
        clf = platt_fit(fit_classifier(P.train_projections, y), P.train_projections, y)
        path = tmp_path / "m.json"
        save_model(path, P, clf, {"note": "x"})
        _, back = load_model(path)
        Z = P.transform(data.X)
        assert np.array_equal(svm_probability(clf, Z), svm_probability(back, Z))
        assert back.labels == clf.labels

    def test_one_vs_rest(self, tmp_path, data):
        P = dimred.fit("klda", data.X, data.y, kernel=KernelSpec("rbf", 1.0), d=3)
        clf = fit_classifier(P.train_projections, data.y)
        path = tmp_path / "m.json"
        save_model(path, P, clf)
        _, back = load_model(path)
        Z = P.transform(data.X)
        assert np.array_equal(classifier_predict(clf, Z), classifier_predict(back, Z))

    def test_save_is_deterministic(self, tmp_path, data):
        P = dimred.fit("pca", data.X, data.y, d=2)
        save_model(tmp_path / "a.json", P)
        save_model(tmp_path / "b.json", P)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestSchema:
    @pytest.mark.parametrize("doc", [
        "not json",
        json.dumps([1, 2]),
        json.dumps({"format": "other", "version": 1}),
        json.dumps({"format": "kerneldr-model", "version": 99}),
    ])
    def test_rejects(self, tmp_path, doc):
        path = tmp_path / "bad.json"
        path.write_text(doc)
        with pytest.raises(SchemaError):
            load_model(path)
