// Python bindings: framing, value conversion, headless runs and the bench
// helpers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "polydbg/bench.hpp"
#include "polydbg/config.hpp"
#include "polydbg/errors.hpp"
#include "polydbg/headless.hpp"
#include "polydbg/value_conv.hpp"
#include "polydbg/wire.hpp"

namespace py = pybind11;
using polydbg::ValueEnvelope;
using polydbg::ValueKind;

namespace {

py::object json_module() { return py::module_::import("json"); }

py::object to_python(const nlohmann::json& doc) { return json_module().attr("loads")(doc.dump()); }

nlohmann::json from_python(const py::handle& obj) {
  return nlohmann::json::parse(py::cast<std::string>(json_module().attr("dumps")(obj)));
}

const polydbg::ValueTable& table_for(const std::string& language) {
  static std::map<std::string, polydbg::ValueTable> cache;
  auto it = cache.find(language);
  if (it == cache.end()) {
    auto table = polydbg::builtin_value_table(language);
    if (!table) throw polydbg::UnknownLanguage(language);
    it = cache.emplace(language, std::move(*table)).first;
  }
  return it->second;
}

ValueEnvelope envelope_of(const py::handle& value) {
  if (value.is_none()) return ValueEnvelope::make_null();
  if (py::isinstance<py::bool_>(value)) return ValueEnvelope::make_bool(value.cast<bool>());
  if (py::isinstance<py::int_>(value)) return ValueEnvelope::make_int(py::str(value).cast<std::string>());
  if (py::isinstance<py::float_>(value)) return ValueEnvelope::make_float(value.cast<double>());
  if (py::isinstance<py::str>(value)) return ValueEnvelope::make_str(value.cast<std::string>());
  throw py::type_error("expected None, bool, int, float or str");
}

py::dict describe(const ValueEnvelope& v) {
  py::dict out;
  out["kind"] = std::string(polydbg::to_string(v.kind));
  out["lexical"] = v.lexical;
  switch (v.kind) {
    case ValueKind::Null: out["value"] = py::none(); break;
    case ValueKind::Bool: out["value"] = py::bool_(v.lexical == "true"); break;
    case ValueKind::Int: out["value"] = py::int_(py::str(v.lexical)); break;
    case ValueKind::Float: out["value"] = py::float_(*v.real); break;
    default: out["value"] = v.lexical; break;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_polydbg, m) {
  m.doc() = "polydbg core";

  static py::exception<polydbg::Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const polydbg::Error& e) {
      error(e.what());
    }
  });

  m.def("encode_frame", [](const py::dict& doc) {
    return py::bytes(polydbg::encode_frame(polydbg::from_document(from_python(doc))));
  }, "Frame one DAP message document.");

  m.def("decode_frames", [](const py::bytes& data) {
    polydbg::FrameDecoder decoder;
    py::list out;
    for (const auto& msg : decoder.feed(std::string(data))) out.append(to_python(polydbg::to_document(msg)));
    if (decoder.buffered() != 0) throw py::value_error("trailing partial frame");
    return out;
  }, "Decode a complete byte stream into message documents.");

  m.def("render_value", [](const std::string& language, const py::handle& value) {
    return polydbg::render_value(table_for(language), envelope_of(value));
  }, py::arg("language"), py::arg("value"));

  m.def("parse_value", [](const std::string& language, const std::string& raw) {
    return describe(polydbg::parse_value(table_for(language), raw));
  }, py::arg("language"), py::arg("raw"));

  m.def("format_float", &polydbg::format_float);

  m.def("run", [](const std::filesystem::path& config, const std::filesystem::path& entry) {
    const auto session_config = polydbg::load_session_config(config);
    polydbg::HeadlessResult result;
    {
      py::gil_scoped_release release;
      result = polydbg::run_headless(session_config, entry);
    }
    py::dict out;
    out["exit_code"] = result.exit_code;
    out["output"] = result.output;
    out["error"] = result.error;
    out["final_value"] = result.final_value ? py::object(describe(*result.final_value)) : py::object(py::none());
    out["wall_seconds"] = result.wall_seconds;
    return out;
  }, py::arg("config"), py::arg("entry"), "Run an entry file headless to termination.");

  m.def("fit_linear", [](const std::vector<std::pair<double, double>>& points) {
    const auto fit = polydbg::fit_linear(points);
    return py::make_tuple(fit.intercept, fit.slope, fit.r_squared);
  }, "Least squares y = a + b x; returns (a, b, r_squared).");

  m.def("generate_stress_program", [](const std::filesystem::path& config, const std::string& caller,
                                      const std::string& callee, int n, const std::filesystem::path& dir) {
    const auto program = polydbg::generate_stress_program(polydbg::load_session_config(config), caller, callee, n, dir);
    return py::make_tuple(program.caller_file, program.callee_file);
  }, py::arg("config"), py::arg("caller"), py::arg("callee"), py::arg("n"), py::arg("dir"));
}
