//! Drives the bindings from an embedded interpreter.

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "boussinesq_py").unwrap();
        boussinesq_py::init(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("bq", m).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.display(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn config_from_keywords() {
    run(c"
cfg = bq.Config(domain='lshape', alpha=1.5, z=(0.25, 0.5), element='mini')
assert cfg.domain == 'lshape' and cfg.alpha == 1.5 and cfg.z == (0.25, 0.5)
assert cfg.element == 'mini'
assert dict(cfg.to_dict())['picard_tol'] == '1e-8'
cfg.set('adapt_max', 7)
assert cfg.adapt_max == 7
for bad in [dict(colour=1), dict(alpha='x')]:
    try:
        bq.Config(**bad)
    except ValueError:
        pass
    else:
        raise AssertionError(bad)
");
}

#[test]
fn mesh_and_solution() {
    run(c"
m = bq.Mesh.initial('square')
assert (m.n_elements, m.n_vertices) == (8, 9)
try:
    m.bisect([8])
except ValueError:
    pass
else:
    raise AssertionError('out of range element accepted')
s = bq.solve(bq.Config(hsource=0.0), m)
assert s.converged and s.picard_iterations == 1
assert s.evaluate(0.5, 0.5) == (0.0, 0.0, 0.0, 0.0)
try:
    s.evaluate(2.0, 0.5)
except ValueError:
    pass
else:
    raise AssertionError('point outside the domain accepted')
assert s.indicators()['total'] == 0.0
");
}

#[test]
fn adaptive_run() {
    run(c"
r = bq.adapt(bq.Config(alpha=1.0, adapt_max=6))
assert len(r) == 6 and r.success and r.stop_reason == 'completed'
recs = r.records
assert [x['iter'] for x in recs] == list(range(1, 7))
assert all(a['n_elements'] < b['n_elements'] for a, b in zip(recs, recs[1:]))
assert r.slope() < 0
assert r.final_solution().mesh.n_elements == recs[-1]['n_elements']
");
}
