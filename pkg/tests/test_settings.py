import pytest

from bornlab.config.settings import Settings
from bornlab.errors import ConfigError
from bornlab.utils.bit_mapper import BitMapper


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("BORNLAB_MAX_DENSE_QUBITS", "10")
    monkeypatch.setenv("BORNLAB_THREADS", " ")
    settings = Settings.from_env()
    assert settings.max_dense_qubits == 10
    assert settings.threads == Settings.threads


@pytest.mark.parametrize("value", ["many", "0"])
def test_settings_reject_bad_values(monkeypatch, value):
    monkeypatch.setenv("BORNLAB_MAX_KERNEL_QUBITS", value)
    with pytest.raises(ConfigError) as excinfo:
        Settings.from_env()
    assert excinfo.value.key == "BORNLAB_MAX_KERNEL_QUBITS"


def test_bit_layout_puts_qubit_zero_first():
    assert BitMapper.qubits_to_mask([0], 3) == 0b100
    assert BitMapper.mask_to_qubits(0b011, 3) == (1, 2)
    assert BitMapper.format_bitstring(0b100, 3) == "100"
    assert BitMapper.index_to_bits(6, 3) == (1, 1, 0)
    assert BitMapper.bits_to_index([1, 1, 0]) == 6
    assert BitMapper.rows_to_indices([[1, 0, 1], [0, 0, 1]]).tolist() == [5, 1]
    assert BitMapper.window_masks(4, 2) == [0b1100, 0b0110, 0b0011]
    assert BitMapper.subsets_up_to(3, 1) == [0, 0b001, 0b010, 0b100]
