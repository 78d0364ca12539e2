"""Composition engine: drawer modes, ownership, documents."""

import json

import pytest
from hypothesis import given, strategies as st

from fabrictwin import (
    Composition,
    CompositionError,
    TwinError,
    DrawerMode,
    NAMED_CONFIGURATIONS,
    apply_named_configuration,
    attach,
    config_to_json,
    detach,
    export_config,
    import_config,
    new_composition,
    set_drawer_mode,
    validate,
)
from lab import GPUS, lab_topology


@pytest.fixture(scope="module")
def lab():
    return lab_topology()


def code_of(excinfo):
    return excinfo.value.code


class TestBasics:
    def test_new_composition(self, topo):
        comp = new_composition(topo)
        assert comp.revision == 0
        assert comp.ownership == {}
        assert all(m is DrawerMode.ADVANCED for m in comp.modes.values())
        assert set(comp.modes) == {"drawer-1", "drawer-2"}

    def test_attach_detach_revision(self, lab):
        comp = new_composition(lab)
        comp = attach(comp, "lab-gpu-0", "host-a", "alice")
        assert comp.revision == 1
        own = comp.owner_of("lab-gpu-0")
        assert (own.host, own.user) == ("host-a", "alice")
        assert comp.owned_by("host-a") == ["lab-gpu-0"]
        comp = detach(comp, "lab-gpu-0", "alice")
        assert comp.revision == 2
        assert comp.owner_of("lab-gpu-0") is None

    def test_attach_conflicts(self, lab):
        comp = attach(new_composition(lab), "lab-gpu-0", "host-a", "alice")
        with pytest.raises(CompositionError) as e:
            attach(comp, "lab-gpu-0", "host-b", "bob")
        assert code_of(e) == "ALREADY_OWNED"
        with pytest.raises(TwinError) as e:
            attach(comp, "ghost-gpu", "host-a", "alice")
        assert code_of(e) == "UNKNOWN_DEVICE"
        with pytest.raises(TwinError) as e:
            attach(comp, "lab-gpu-1", "ghost-host", "alice")
        assert code_of(e) == "DANGLING_REFERENCE"

    def test_detach_policy(self, lab):
        comp = attach(new_composition(lab), "lab-gpu-0", "host-a", "alice")
        with pytest.raises(CompositionError) as e:
            detach(comp, "lab-gpu-0", "bob")
        assert code_of(e) == "FORBIDDEN"
        # admin override works for any user
        assert detach(comp, "lab-gpu-0", "bob", admin=True).owner_of("lab-gpu-0") is None
        with pytest.raises(CompositionError) as e:
            detach(comp, "lab-gpu-1", "alice")
        assert code_of(e) == "NOT_OWNED"

    def test_local_device_is_host_bound(self, lab):
        comp = new_composition(lab)
        comp = attach(comp, "nvme-a", "host-a", "alice")  # its own host: fine
        with pytest.raises(CompositionError) as e:
            attach(detach(comp, "nvme-a", "alice"), "nvme-a", "host-b", "bob")
        assert code_of(e) == "NOT_CONNECTED"

    def test_uncabled_host_cannot_reach_drawer(self):
        # host-c exists but its port is not attached to the drawer
        lab = lab_topology(n_drawer_ports=2, n_hosts=3)
        with pytest.raises(CompositionError) as e:
            attach(new_composition(lab), "lab-gpu-0", "host-c", "carol")
        assert code_of(e) == "NOT_CONNECTED"


class TestDrawerModes:
    def test_standard_1host_single_owner(self, lab):
        comp = set_drawer_mode(new_composition(lab), "lab-a", DrawerMode.STANDARD_1HOST)
        comp = attach(comp, "lab-gpu-0", "host-a", "alice")
        comp = attach(comp, "lab-gpu-7", "host-a", "alice")  # same host: fine
        with pytest.raises(CompositionError) as e:
            attach(comp, "lab-gpu-1", "host-b", "bob")
        assert code_of(e) == "HOST_LIMIT"

    def test_standard_2host_halves(self, lab):
        comp = set_drawer_mode(new_composition(lab), "lab-a", DrawerMode.STANDARD_2HOST)
        comp = attach(comp, "lab-gpu-0", "host-a", "alice")  # first half -> first port's host
        comp = attach(comp, "lab-gpu-4", "host-b", "bob")  # second half -> second port's host
        for device, host in [("lab-gpu-1", "host-b"), ("lab-gpu-5", "host-a"),
                             ("lab-gpu-2", "host-c")]:
            with pytest.raises(CompositionError) as e:
                attach(comp, device, host, "x")
            assert code_of(e) == "MODE_CAPACITY"

    def test_standard_2host_needs_two_connections(self):
        lab = lab_topology(n_drawer_ports=1, n_hosts=1)
        with pytest.raises(CompositionError) as e:
            set_drawer_mode(new_composition(lab), "lab-a", DrawerMode.STANDARD_2HOST)
        assert code_of(e) == "MODE_CONFLICT"

    def test_advanced_allows_three_hosts(self, lab):
        comp = new_composition(lab)
        for i, (host, user) in enumerate([("host-a", "alice"), ("host-b", "bob"),
                                          ("host-c", "carol")]):
            comp = attach(comp, f"lab-gpu-{i}", host, user)
        assert len(comp.drawer_owners("lab-a")) == 3

    def test_mode_change_rejects_conflicting_ownership(self, lab):
        comp = new_composition(lab)
        comp = attach(comp, "lab-gpu-0", "host-a", "alice")
        comp = attach(comp, "lab-gpu-1", "host-b", "bob")
        with pytest.raises(CompositionError) as e:
            set_drawer_mode(comp, "lab-a", DrawerMode.STANDARD_1HOST)
        assert code_of(e) == "MODE_CONFLICT"
        # compatible ownership may switch modes freely
        comp = detach(comp, "lab-gpu-1", "bob")
        switched = set_drawer_mode(comp, "lab-a", DrawerMode.STANDARD_1HOST)
        assert switched.mode_of("lab-a") is DrawerMode.STANDARD_1HOST
        assert switched.revision == comp.revision + 1

    def test_unknown_drawer(self, lab):
        with pytest.raises(Exception) as e:
            set_drawer_mode(new_composition(lab), "no-drawer", DrawerMode.ADVANCED)
        assert e.value.code == "DANGLING_REFERENCE"


class TestNamedConfigurations:
    def test_labels(self):
        assert set(NAMED_CONFIGURATIONS) == {
            "localGPUs", "hybridGPUs", "falconGPUs", "localNVMe", "falconNVMe",
        }

    @pytest.mark.parametrize(
        "label,expected",
        [
            ("localGPUs", {f"local-gpu-{i}" for i in range(8)}),
            (
                "hybridGPUs",
                {f"local-gpu-{i}" for i in range(4)} | {f"falcon-gpu-1-{i}" for i in range(4)},
            ),
            (
                "falconGPUs",
                {f"falcon-gpu-1-{i}" for i in range(4)} | {f"falcon-gpu-2-{i}" for i in range(4)},
            ),
            ("localNVMe", {f"local-gpu-{i}" for i in range(8)} | {"nvme-local"}),
            ("falconNVMe", {f"local-gpu-{i}" for i in range(8)} | {"nvme-falcon"}),
        ],
    )
    def test_device_sets(self, topo, label, expected):
        comp = apply_named_configuration(topo, label)
        assert set(comp.ownership) == expected
        assert all(o.host == "host-1" for o in comp.ownership.values())
        assert validate(comp) == []

    def test_unknown_label(self, topo):
        with pytest.raises(CompositionError) as e:
            apply_named_configuration(topo, "quantumGPUs")
        assert code_of(e) == "UNKNOWN_LABEL"

    def test_insufficient_resources(self, lab):
        with pytest.raises(CompositionError) as e:
            apply_named_configuration(lab, "localGPUs", "host-a")
        assert code_of(e) == "INSUFFICIENT_RESOURCES"


class TestDocuments:
    def test_export_import_identity(self, topo):
        comp = apply_named_configuration(topo, "hybridGPUs")
        doc = export_config(comp)
        text = config_to_json(doc)
        back = import_config(topo, json.loads(text))
        assert config_to_json(export_config(back)) == text
        assert back.revision == 0  # imports start a fresh revision line
        assert back.ownership.keys() == comp.ownership.keys()
        assert back.modes == comp.modes

    def test_export_is_byte_stable(self, topo):
        comp = apply_named_configuration(topo, "falconNVMe")
        assert config_to_json(export_config(comp)) == config_to_json(export_config(comp))

    def test_import_schema_errors(self, topo):
        with pytest.raises(CompositionError) as e:
            import_config(topo, {"ownership": []})
        assert code_of(e) == "SCHEMA_ERROR"
        good = export_config(new_composition(topo))
        bad = dict(good, ownership=[{"device": "nope", "host": "host-1", "user": "u"}])
        with pytest.raises(CompositionError) as e:
            import_config(topo, bad)
        assert code_of(e) == "UNKNOWN_DEVICE"
        twice = dict(
            good,
            ownership=[
                {"device": "local-gpu-0", "host": "host-1", "user": "u"},
                {"device": "local-gpu-0", "host": "host-1", "user": "u"},
            ],
        )
        with pytest.raises(CompositionError) as e:
            import_config(topo, twice)
        assert code_of(e) == "SCHEMA_ERROR"

    def test_import_preserves_violations_for_validate(self, lab):
        comp = new_composition(lab)
        comp = attach(comp, "lab-gpu-0", "host-a", "alice")
        comp = attach(comp, "lab-gpu-1", "host-b", "bob")
        doc = export_config(comp)
        doc["modes"]["lab-a"] = "STANDARD_1HOST"  # now illegal: two owners
        imported = import_config(lab, doc)
        rules = [v.rule for v in validate(imported)]
        assert rules == ["HOST_LIMIT"]

    def test_validate_flags_unknown_device(self, lab):
        base = new_composition(lab)
        comp = Composition(
            topology=lab,
            modes=dict(base.modes),
            ownership={"ghost": type(next(iter(
                attach(base, "lab-gpu-0", "host-a", "u").ownership.values()
            )))("ghost", "host-a", "u")},
            revision=0,
        )
        assert [v.rule for v in validate(comp)] == ["UNKNOWN_DEVICE"]


class TestEngineInvariant:
    """Engine-built compositions are always valid, whatever the op sequence."""

    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["attach", "detach", "mode"]),
                st.sampled_from(GPUS + ("nvme-a",)),
                st.sampled_from(["host-a", "host-b", "host-c"]),
                st.sampled_from(list(DrawerMode)),
            ),
            max_size=30,
        )
    )
    def test_random_op_sequences_stay_valid(self, ops):
        lab = lab_topology()
        comp = new_composition(lab)
        for action, device, host, mode in ops:
            try:
                if action == "attach":
                    comp = attach(comp, device, host, f"user-{host}")
                elif action == "detach":
                    comp = detach(comp, device, f"user-{host}")
                else:
                    comp = set_drawer_mode(comp, "lab-a", mode)
            except CompositionError:
                continue
            assert validate(comp) == []
        for dev_id, own in comp.ownership.items():
            assert lab.device(dev_id) is not None
            assert lab.host(own.host) is not None
