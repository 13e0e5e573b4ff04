import additive_growth_py as growth


def test_entry_points():
    assert growth.__version__ is not None
    assert growth.zoo_model is not None
    assert growth.validate_growth_model is not None
    assert set(growth.__all__) <= set(dir(growth))
