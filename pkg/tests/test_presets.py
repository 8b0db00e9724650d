import json

import numpy as np
import pytest

from msms import presets
from msms.errors import InvalidScenarioError
from msms.presets import (
    apply_override,
    preset,
    ramp_profile,
    scenario_from_doc,
    validate_scenario,
)


class TestPresetContents:
    def test_example1(self):
        doc = preset("example1")
        assert doc["time"]["T"] == 17.0
        assert doc["time"]["tau"] == 1e-3
        assert doc["species"]["M"] == [1.0, 1.0, 1.0]
        assert doc["species"]["z"] == [1.0, 1.0, 0.0]
        assert doc["species"]["Dms"][0][1] == 0.833
        assert doc["species"]["Dms"][0][2] == 0.680
        assert doc["species"]["Dms"][1][2] == 0.168
        assert doc["bc"] == {"phi_left": 0.0, "phi_right": 0.0}
        assert doc["domain"]["n_p"] == 100
        assert doc["solver"]["eta"] == 1e-5
        assert doc["solver"]["eps_tol"] == 1e-10
        assert doc["solver"]["eps_reg"] == 2.0**-52

    def test_example2_heavy_first_species(self):
        doc = preset("example2")
        assert doc["species"]["M"] == [6.0, 1.0, 1.0]
        assert doc["time"]["T"] == 4.0

    def test_example3_and_4_field_on(self):
        assert preset("example3")["bc"]["phi_left"] == 10.0
        assert preset("example3")["species"]["M"][0] == 2.0
        assert preset("example4")["species"]["M"] == [1.0, 2.0, 1.0]
        assert preset("example3")["time"]["T"] == 8.0

    def test_example5_field_free(self):
        doc = preset("example5")
        assert doc["species"]["z"] == [0.0, 0.0, 0.0]
        assert doc["outputs"]["hstar"] == "constant"

    def test_convergence(self):
        doc = preset("convergence")
        assert doc["time"]["tau"] == 1e-4
        assert doc["time"]["T"] == 0.01
        assert presets.CONVERGENCE_REFERENCE % max(presets.CONVERGENCE_LEVELS) == 0

    def test_initial_constant_species2(self):
        scen = scenario_from_doc(preset("example1"))
        rho0 = scen.initial_profile(scen.grid.nodes)
        np.testing.assert_array_equal(rho0[1], 0.2)

    def test_unknown_preset(self):
        with pytest.raises(InvalidScenarioError):
            preset("example9")


class TestRampProfile:
    def test_kinks_and_plateaus(self):
        eta = 1e-5
        prof = ramp_profile(eta)
        y = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        rho = prof(y)
        np.testing.assert_allclose(rho[0], [0.7, 0.7, (0.7 + eta) / 2, eta, eta], atol=1e-15)
        np.testing.assert_allclose(rho.sum(axis=0), 1.0, atol=1e-15)

    def test_exact_mass(self):
        # trapezoid on any grid containing the kinks integrates it exactly
        prof = ramp_profile(1e-5)
        y = np.linspace(0, 1, 101)
        mass = np.trapezoid(prof(y)[0], y)
        assert mass == pytest.approx(0.350005, abs=1e-12)


class TestValidation:
    def test_round_trip_identity(self):
        for name in presets.PRESET_NAMES:
            canonical = validate_scenario(preset(name))
            again = validate_scenario(json.loads(json.dumps(canonical)))
            assert again == canonical

    def test_unknown_top_level_key(self):
        doc = preset("example1")
        doc["extra"] = 1
        with pytest.raises(InvalidScenarioError):
            validate_scenario(doc)

    def test_unknown_nested_key(self):
        doc = preset("example1")
        doc["time"]["bogus"] = 1
        with pytest.raises(InvalidScenarioError):
            validate_scenario(doc)

    def test_missing_section(self):
        doc = preset("example1")
        del doc["species"]
        with pytest.raises(InvalidScenarioError):
            validate_scenario(doc)

    def test_asymmetric_diffusivities(self):
        doc = preset("example1")
        doc["species"]["Dms"][0][1] = 0.9
        with pytest.raises(InvalidScenarioError):
            validate_scenario(doc)

    def test_bad_reactions(self):
        doc = preset("example1")
        doc["physics"]["reactions"] = "fancy"
        with pytest.raises(InvalidScenarioError):
            validate_scenario(doc)

    def test_nodal_tables_accepted(self):
        doc = preset("example1")
        doc["initial"] = {"rho": [[0.3, 0.3], [0.3, 0.3], [0.4, 0.4]]}
        doc["physics"]["f"] = [0.0, 1.0, 0.0]
        scen = scenario_from_doc(doc)
        rho0 = scen.initial_profile(scen.grid.nodes)
        np.testing.assert_allclose(rho0[0], 0.3, atol=1e-15)
        f_mid = scen.spec.background_charge(np.array([0.5]))
        assert f_mid[0] == pytest.approx(1.0)

    def test_bad_hstar(self):
        doc = preset("example1")
        doc["outputs"]["hstar"] = "maybe"
        with pytest.raises(InvalidScenarioError):
            validate_scenario(doc)


class TestOverrides:
    def test_scalar_and_list_paths(self):
        doc = preset("example1")
        apply_override(doc, "time.T", 0.5)
        apply_override(doc, "species.M.0", 4.0)
        assert doc["time"]["T"] == 0.5
        assert doc["species"]["M"][0] == 4.0
        validate_scenario(doc)

    def test_bad_paths(self):
        doc = preset("example1")
        with pytest.raises(InvalidScenarioError):
            apply_override(doc, "nope.T", 1)
        with pytest.raises(InvalidScenarioError):
            apply_override(doc, "species.M.9", 1.0)
        with pytest.raises(InvalidScenarioError):
            apply_override(doc, "species.M.x", 1.0)

    def test_preset_returns_fresh_copies(self):
        a = preset("example1")
        a["time"]["T"] = 99
        assert preset("example1")["time"]["T"] == 17.0
