import json

import numpy as np
import pytest

from symplab.config import DEFAULT_GRID, ConfigError, RunConfig, load_config
from symplab.deformations import weinstein_family
from symplab.generators import Generator
from symplab.io import (ContainerError, field_to_csv, load_family, load_field, load_generator,
                        load_isotopy, read_container, rows_to_csv, save_family, save_field,
                        save_generator, save_isotopy, write_container)
from symplab.torus import TorusGrid


# --- containers ---------------------------------------------------------------

def test_field_round_trip(tmp_path, grid16, rng):
    vals = rng.normal(size=grid16.shape)
    path = save_field(tmp_path / "f.json", grid16, vals)
    grid, back = load_field(path)
    assert grid == grid16 and back.shape == (1,) + grid16.shape
    np.testing.assert_array_equal(back[0], vals)


def test_generator_round_trip(tmp_path, grid16, rng):
    g = Generator.random(rng, grid16, 12, amplitude=0.01)
    back = load_generator(save_generator(tmp_path / "g", g))
    # loading re-normalizes the potential to zero mean, which moves the last bit
    np.testing.assert_allclose(back.hams, g.hams, rtol=0, atol=1e-17)
    np.testing.assert_array_equal(back.harms, g.harms)
    np.testing.assert_array_equal(back.times, g.times)


def test_isotopy_round_trip(tmp_path, grid16, intg, rng):
    phi = intg.integrate(Generator.random(rng, grid16, 10, amplitude=0.01))
    back = load_isotopy(save_isotopy(tmp_path / "phi.json", phi))
    np.testing.assert_array_equal(back.disp, phi.disp)
    np.testing.assert_array_equal(back.velocity, phi.velocity)


def test_family_round_trip(tmp_path, grid16):
    g = Generator.from_functions(grid16, 20, harm_fn=lambda t: [np.sin(2 * np.pi * t), 0.0])
    fam = weinstein_family(g, 5)
    back = load_family(save_family(tmp_path / "fam.json", fam))
    np.testing.assert_array_equal(back.shifts, fam.shifts)


def test_container_bytes_are_deterministic(tmp_path, grid16, rng):
    g = Generator.random(rng, grid16, 8)
    a = save_generator(tmp_path / "a" / "g.json", g)
    b = save_generator(tmp_path / "b" / "g.json", g)
    for name in ("g.json", "g.hams.bin", "g.harms.bin", "g.times.bin"):
        assert (a.parent / name).read_bytes() == (b.parent / name).read_bytes()


def test_wrong_kind(tmp_path, grid16):
    path = save_field(tmp_path / "f.json", grid16, np.zeros(grid16.shape))
    with pytest.raises(ContainerError):
        load_generator(path)


@pytest.mark.parametrize("corrupt", ["truncate", "not_json", "format", "dtype", "missing_file"])
def test_malformed_containers(tmp_path, grid16, corrupt):
    path = save_field(tmp_path / "f.json", grid16, np.ones(grid16.shape))
    manifest = json.loads(path.read_text())
    binary = tmp_path / manifest["arrays"]["values"]["file"]
    if corrupt == "truncate":
        binary.write_bytes(binary.read_bytes()[:-8])
    elif corrupt == "not_json":
        path.write_text("{")
    elif corrupt == "format":
        manifest["format"] = "other"
        path.write_text(json.dumps(manifest))
    elif corrupt == "dtype":
        manifest["arrays"]["values"]["dtype"] = ">f4"
        path.write_text(json.dumps(manifest))
    else:
        binary.unlink()
    with pytest.raises(ContainerError):
        read_container(path)


def test_missing_arrays(tmp_path, grid16):
    path = write_container(tmp_path / "g.json", "generator", grid16, {"times": np.zeros(3)})
    with pytest.raises(ContainerError):
        load_generator(path)


def test_field_csv(grid16):
    vals = np.arange(grid16.num_points, dtype=float).reshape(grid16.shape)
    lines = field_to_csv(grid16, vals).splitlines()
    assert lines[0] == "i0,i1,c0" and lines[1] == "0,0,0.0" and len(lines) == 1 + 256
    with pytest.raises(ValueError):
        field_to_csv(TorusGrid(1, 128), np.zeros((128, 128)))


def test_rows_to_csv_repr_round_trip():
    x = 0.1 + 0.2
    text = rows_to_csv(["name", "value"], [("a", x), ("b", 3)])
    assert float(text.splitlines()[1].split(",")[1]) == x


# --- configuration ------------------------------------------------------------

def test_config_defaults():
    cfg = RunConfig()
    assert cfg.grid_size == DEFAULT_GRID[1] and cfg.steps == 200
    assert RunConfig(n=2, rotation=(0.3, 0, 0, 0.4)).grid_size == DEFAULT_GRID[2]


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# desk run\nn = 1\ngrid-size = 32\nrotation = 0.1, 0.2\nreparam = 1 3\nplot = yes\n")
    cfg = load_config(path)
    assert (cfg.grid_size, cfg.rotation, cfg.reparam, cfg.plot) == (32, (0.1, 0.2), (1, 3), True)


def test_config_replace_and_dimension_change():
    cfg = RunConfig().replace(steps=50, seed=None)
    assert cfg.steps == 50 and cfg.seed == 0
    cfg2 = cfg.replace(n=2)
    assert cfg2.grid_size == 16 and len(cfg2.rotation) == 4


@pytest.mark.parametrize("text", ["bogus = 1\n", "steps = many\n", "steps = 1\n", "[extra]\nn = 1\n",
                                  "closed_tol = -1\n", "rotation = 0.1\n", "reparam = 0\n"])
def test_config_errors(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_config_dict_round_trip():
    cfg = RunConfig(seed=7, amplitude=0.01)
    assert RunConfig.from_mapping(cfg.to_dict()) == cfg
