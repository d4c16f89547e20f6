"""
Unit tests for the NISD, NISW, IDX and report file repositories.
"""
import struct

import numpy as np
import pytest

from scatternet.exceptions import FormatError, StorageError, ValidationError
from scatternet.models.inversion import InversionTrace, IterationRecord
from scatternet.models.network import EpochRecord, ModuleSpec, TrainingHistory
from scatternet.repositories.dataset_repository import dataset_repository, read_dataset, write_dataset
from scatternet.repositories.idx_repository import IDX_IMAGE_MAGIC, idx_repository, read_idx
from scatternet.repositories.report_repository import (
    encode_pgm,
    write_history_csv,
    write_pgm,
    write_trace_csv,
)
from scatternet.repositories.weights_repository import load_weights, save_weights, weights_repository
from scatternet.services.dataset_service import build_dataset, synth_shapes
from scatternet.services.network_service import init_model


@pytest.fixture
def dataset(small_grid, small_setup):
    shapes = synth_shapes(seed=2, grid=small_grid, count=3, chi_value=1.5 + 0.1j)
    return build_dataset(shapes, small_grid, small_setup, snr_db=25.0, seed=4)


@pytest.fixture
def model():
    spec = ModuleSpec(kernel1=3, channels1=4, kernel2=5, channels2=2, kernel3=3)
    return init_model(spec, n_modules=2, init_std=0.1, seed=8)


class TestDatasetRepository:
    """Test cases for the NISD container."""

    def test_write_then_read(self, dataset, tmp_path):
        path = tmp_path / "data.nisd"
        write_dataset(dataset, path)
        loaded = read_dataset(path)

        assert loaded.header == dataset.header
        for a, b in zip(loaded.samples, dataset.samples):
            np.testing.assert_array_equal(a.chi.chi, b.chi.chi)
            np.testing.assert_array_equal(a.measurements, b.measurements)
            np.testing.assert_array_equal(a.chi_bp.chi, b.chi_bp.chi)

    def test_reencode_is_bit_exact(self, dataset):
        payload = dataset_repository.encode(dataset)

        assert dataset_repository.encode(dataset_repository.decode(payload)) == payload

    def test_header_is_text(self, dataset):
        payload = dataset_repository.encode(dataset)
        version, length = struct.unpack("<II", payload[4:12])
        header = payload[12:12 + length].decode("utf-8")

        assert payload[:4] == b"NISD"
        assert version == 1
        assert "snr_db=25.0\n" in header
        assert "count=3\n" in header

    def test_noiseless_header(self, small_grid, small_setup):
        clean = build_dataset(synth_shapes(0, small_grid, 1, 2.0), small_grid, small_setup)

        assert dataset_repository.decode(dataset_repository.encode(clean)).header.snr_db == float("inf")

    def test_bad_magic(self, dataset):
        payload = dataset_repository.encode(dataset)

        with pytest.raises(FormatError):
            dataset_repository.decode(b"NISX" + payload[4:])

    def test_unsupported_version(self, dataset):
        payload = bytearray(dataset_repository.encode(dataset))
        payload[4:8] = struct.pack("<I", 2)

        with pytest.raises(FormatError) as error:
            dataset_repository.decode(bytes(payload))
        assert error.value.actual == 2

    @pytest.mark.parametrize("cut", [1, 16])
    def test_truncated_body(self, dataset, cut):
        payload = dataset_repository.encode(dataset)

        with pytest.raises(FormatError):
            dataset_repository.decode(payload[:-cut])

    def test_trailing_bytes(self, dataset):
        with pytest.raises(FormatError):
            dataset_repository.decode(dataset_repository.encode(dataset) + b"\x00")

    def test_missing_file(self, tmp_path):
        with pytest.raises(StorageError) as error:
            read_dataset(tmp_path / "absent.nisd")
        assert error.value.error_code == "STORAGE_ERROR"


class TestWeightsRepository:
    """Test cases for the NISW container."""

    def test_save_then_load(self, model, tmp_path):
        path = tmp_path / "model.nisw"
        save_weights(model, path)
        loaded = load_weights(path)

        assert loaded.parameters_equal(model)
        assert loaded.spec == model.spec

    def test_reencode_is_bit_exact(self, model):
        payload = weights_repository.encode(model)

        assert weights_repository.encode(weights_repository.decode(payload)) == payload

    def test_residual_supplied_by_caller(self, model):
        loaded = weights_repository.decode(weights_repository.encode(model), residual=True)

        assert all(module.residual for module in loaded.modules)

    def test_layer_header(self, model):
        payload = weights_repository.encode(model)

        assert struct.unpack("<4sII", payload[:12]) == (b"NISW", 1, 2)
        assert struct.unpack("<III", payload[12:24]) == (4, 1, 3)

    def test_trailing_bytes(self, model):
        with pytest.raises(FormatError):
            weights_repository.decode(weights_repository.encode(model) + b"\x00" * 16)

    def test_truncated(self, model):
        with pytest.raises(FormatError):
            weights_repository.decode(weights_repository.encode(model)[:-8])

    def test_no_modules(self):
        with pytest.raises(FormatError):
            weights_repository.decode(b"NISW" + struct.pack("<II", 1, 0))

    def test_inconsistent_channels(self, model):
        payload = bytearray(weights_repository.encode(model))
        payload[12:24] = struct.pack("<III", 4, 2, 3)

        with pytest.raises(FormatError):
            weights_repository.decode(bytes(payload))


class TestIdxRepository:
    """Test cases for IDX image files."""

    def _payload(self, count=2, rows=3, cols=4):
        header = struct.pack(">IIII", IDX_IMAGE_MAGIC, count, rows, cols)
        return header + bytes(range(count * rows * cols))

    def test_parse(self):
        images = idx_repository.parse(self._payload())

        assert len(images) == 2
        assert images[0].shape == (3, 4)
        assert images[0][0, 1] == 1
        assert images[1][2, 3] == 23

    def test_read(self, tmp_path):
        path = tmp_path / "images.idx"
        path.write_bytes(self._payload(count=1))

        assert len(read_idx(path)) == 1

    def test_bad_magic(self):
        payload = self._payload()

        with pytest.raises(FormatError):
            idx_repository.parse(struct.pack(">I", 0x0D03) + payload[4:])

    def test_unsupported_rank(self):
        with pytest.raises(FormatError) as error:
            idx_repository.parse(struct.pack(">II", 0x0801, 5) + bytes(5))
        assert error.value.actual == 1

    @pytest.mark.parametrize("cut", [1, 20, 40])
    def test_truncated(self, cut):
        with pytest.raises(FormatError):
            idx_repository.parse(self._payload()[:-cut])

    def test_missing_file(self, tmp_path):
        with pytest.raises(StorageError):
            read_idx(tmp_path / "absent.idx")


class TestReportFiles:
    """Test cases for PGM and CSV report artifacts."""

    def test_pgm_header_and_orientation(self):
        image = np.zeros((2, 3))
        image[0, :] = 1.0
        payload = encode_pgm(image)

        assert payload.startswith(b"P5\n3 2\n255\n")
        assert payload[-6:] == bytes([0, 0, 0, 255, 255, 255])

    def test_pgm_quantization(self):
        payload = encode_pgm(np.array([[0.5, 2.0, -1.0]]))

        assert payload[-3:] == bytes([128, 255, 0])

    def test_pgm_rejects_non_image(self):
        with pytest.raises(ValidationError):
            encode_pgm(np.zeros(4))

    def test_write_creates_parent(self, tmp_path):
        path = write_pgm(np.ones((2, 2)), tmp_path / "nested" / "img.pgm")

        assert path.read_bytes() == b"P5\n2 2\n255\n" + bytes([255] * 4)

    def test_unwritable_target(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")

        with pytest.raises(StorageError):
            write_pgm(np.ones((2, 2)), blocker / "img.pgm")

    def test_trace_csv(self, tmp_path):
        trace = InversionTrace(method="csi")
        trace.append(IterationRecord(iteration=1, data_residual=0.5, objective=0.25))
        trace.append(IterationRecord(iteration=2, data_residual=0.125, objective=0.0625))

        text = write_trace_csv(trace, tmp_path / "trace.csv").read_text()

        assert text == "iteration,data_residual,objective\n1,0.5,0.25\n2,0.125,0.0625\n"

    def test_empty_trace_has_header_only(self, tmp_path):
        text = write_trace_csv(InversionTrace(method="bp"), tmp_path / "trace.csv").read_text()

        assert text == "iteration,data_residual,objective\n"

    def test_history_csv(self, tmp_path):
        history = TrainingHistory()
        history.append(EpochRecord(epoch=1, stage="pretrain", module=0, train_loss=1.0, val_loss=2.0,
                                   learning_rates=[1e-4, 1e-4, 1e-5]))
        history.append(EpochRecord(epoch=2, stage="finetune", train_loss=0.5, val_loss=1.5,
                                   learning_rates=[1e-4, 1e-4, 1e-5]))

        lines = write_history_csv(history, tmp_path / "history.csv").read_text().splitlines()

        assert lines[0] == "epoch,stage,module,train_loss,val_loss,lr_0,lr_1,lr_2"
        assert lines[1] == "1,pretrain,0,1.0,2.0,0.0001,0.0001,1e-05"
        assert lines[2] == "2,finetune,,0.5,1.5,0.0001,0.0001,1e-05"
