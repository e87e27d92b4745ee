#include "dpcl/http_service.hpp"

#include <httplib.h>

#include "dpcl/printer.hpp"
#include "dpcl/rewriter.hpp"
#include "dpcl/serialize.hpp"

namespace dpcl {

namespace {

constexpr const char* kJson = "application/json";

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_program:
    case ErrorCode::unknown_session:
      return 404;
    case ErrorCode::invalid_step:
    case ErrorCode::corrupt_payload:
    case ErrorCode::version_mismatch:
      return 400;
    case ErrorCode::label_not_found:
    case ErrorCode::not_applicable:
    case ErrorCode::unknown_transform:
    case ErrorCode::invalid_program:
      return 422;
    case ErrorCode::io:
      return 500;
    default:
      return 409;  // the interpreter refused the step
  }
}

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

Json error_body(ErrorCode code, const std::string& message) {
  return Json{{"error", error_to_json(code, message)}};
}

void send_error(httplib::Response& res, int status, ErrorCode code, const std::string& message) {
  send(res, status, error_body(code, message));
}

Json diagnostics_to_json(const std::vector<Diagnostic>& ds) {
  Json out = Json::array();
  for (const auto& d : ds)
    out.push_back({{"severity", d.severity == Severity::error ? "error" : "warning"},
                   {"code", d.code},
                   {"message", d.message},
                   {"line", d.span.start_line},
                   {"column", d.span.start_col},
                   {"text", format_diagnostic(d)}});
  return out;
}

// Runs a handler, mapping dpcl errors to their HTTP status.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), e.code(), e.what());
    } catch (const Json::exception& e) {
      send_error(res, 400, ErrorCode::corrupt_payload, e.what());
    }
  };
}

Json object_body(const httplib::Request& req) {
  Json j = parse_json(req.body.empty() ? "{}" : req.body);
  if (!j.is_object()) throw Error(ErrorCode::corrupt_payload, "request body must be a JSON object");
  return j;
}

std::string string_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(ErrorCode::corrupt_payload, std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

Json state_json(const Session& s) { return state_to_json(s.state, s.program->interpreter.get()); }

Json session_json(const SessionStore& store, const Session& s) {
  return Json{{"session_id", s.id},
              {"program_id", s.program->id},
              {"parent", s.parent ? Json(*s.parent) : Json()},
              {"lineage", store.lineage(s.id)},
              {"created_at", s.created_at},
              {"last_step_at", s.last_step_at},
              {"clock", s.state.clock}};
}

}  // namespace

struct HttpService::Impl {
  explicit Impl(SessionStore& st) : store(st) { routes(); }

  void routes();

  SessionStore& store;
  httplib::Server server;
};

void HttpService::Impl::routes() {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    ErrorCode code = res.status == 404 ? ErrorCode::unknown_session : ErrorCode::invalid_step;
    std::string message = res.status == 404 ? "no route for " + req.method + " " + req.path
                                            : "request rejected";
    res.set_content(error_body(code, message).dump(), kJson);
    return httplib::Server::HandlerResponse::Handled;
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send_error(res, 500, ErrorCode::io, message);
  });

  server.Get("/transforms", [](const httplib::Request&, httplib::Response& res) {
    send(res, 200, Json{{"transforms", transformation_names()}});
  });

  server.Post("/programs", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::string source = req.body;
    std::string name = "<program>";
    if (req.get_header_value("Content-Type").find("json") != std::string::npos) {
      Json j = object_body(req);
      source = string_field(j, "source");
      if (j.contains("name")) name = string_field(j, "name");
    }
    AddProgramResult r = store.add_program(source, name);
    if (!r.program) {
      std::string first;
      for (const auto& d : r.diagnostics)
        if (d.severity == Severity::error) {
          first = d.message;
          break;
        }
      Json body = error_body(ErrorCode::invalid_program, first);
      body["diagnostics"] = diagnostics_to_json(r.diagnostics);
      send(res, 422, body);
      return;
    }
    send(res, 201, Json{{"program_id", r.program->id}, {"diagnostics", diagnostics_to_json(r.diagnostics)}});
  }));

  server.Get(R"(/programs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto p = store.program(req.matches[1]);
    send(res, 200, Json{{"program_id", p->id}, {"name", p->name}, {"source", p->source},
                        {"diagnostics", diagnostics_to_json(p->warnings)}});
  }));

  server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    Session s = store.create_session(string_field(object_body(req), "program_id"));
    send(res, 201, Json{{"session_id", s.id}, {"state", state_json(s)}});
  }));

  server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
    send(res, 200, Json{{"sessions", store.session_ids()}});
  }));

  server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send(res, 200, session_json(store, store.session(req.matches[1])));
  }));

  server.Post(R"(/sessions/([^/]+)/steps)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.matches[1];
    Session before = store.session(id);  // 404 before looking at the body
    Step step = step_from_json(parse_json(req.body));
    StepResult r = store.step(id, step);
    send(res, 200, Json{{"delta", delta_to_json(r.delta, &r.state)},
                        {"state", state_to_json(r.state, before.program->interpreter.get())},
                        {"disabled", r.delta.disabled}});
  }));

  server.Get(R"(/sessions/([^/]+)/state)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send(res, 200, state_json(store.session(req.matches[1])));
  }));

  server.Get(R"(/sessions/([^/]+)/positions)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    Session s = store.session(req.matches[1]);
    PositionFilter f;
    if (req.has_param("kind")) {
      std::string k = req.get_param_value("kind");
      if (k == "power") f.kind = PositionCategory::power;
      else if (k == "duty") f.kind = PositionCategory::duty;
      else if (k == "other") f.kind = PositionCategory::other;
      else throw Error(ErrorCode::invalid_step, "kind must be power, duty or other");
    }
    if (req.has_param("violated")) {
      std::string v = req.get_param_value("violated");
      if (v != "true" && v != "false") throw Error(ErrorCode::invalid_step, "violated must be true or false");
      f.violated = v == "true";
    }
    if (req.has_param("holder")) f.holder = req.get_param_value("holder");
    if (req.has_param("action")) f.action = req.get_param_value("action");
    const Interpreter* in = s.program->interpreter.get();
    Json out = Json::array();
    for (const auto& p : in->query_positions(s.state, f)) out.push_back(position_to_json(p, &s.state, in));
    send(res, 200, out);
  }));

  server.Get(R"(/sessions/([^/]+)/enabled)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    Session s = store.session(req.matches[1]);
    if (!req.has_param("actor")) throw Error(ErrorCode::invalid_step, "missing query parameter 'actor'");
    try {
      Json out = Json::array();
      for (const auto& e : s.program->interpreter->enabled_actions(s.state, req.get_param_value("actor"))) {
        Json refs = Json::object();
        for (const auto& [k, v] : e.refinements) refs[k] = v;
        out.push_back({{"power", e.power}, {"event", e.event}, {"refinements", refs}, {"text", e.text()}});
      }
      send(res, 200, out);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::unknown_actor) throw;
      send_error(res, 400, e.code(), e.what());
    }
  }));

  server.Get(R"(/sessions/([^/]+)/trace)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.matches[1];
    Session s = store.session(id);
    send(res, 200, trace_to_json(store.trace(id), s.program->interpreter.get()));
  }));

  server.Post(R"(/sessions/([^/]+)/fork)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    Session child = store.fork_session(req.matches[1]);
    send(res, 201, Json{{"session_id", child.id}, {"parent", *child.parent}, {"state", state_json(child)}});
  }));

  server.Post("/rewrite", guarded([this](const httplib::Request& req, httplib::Response& res) {
    Json body = object_body(req);
    auto program = store.program(string_field(body, "program_id"));
    RewriteResult r = apply_all(program->interpreter->program(), string_field(body, "transform"));
    if (r.sites.empty())
      throw Error(ErrorCode::not_applicable, "no site in the program admits " + string_field(body, "transform"));
    std::string source = pretty_print(r.program);
    AddProgramResult added = store.add_program(source, program->name + " (" + string_field(body, "transform") + ")");
    if (!added.program) throw Error(ErrorCode::invalid_program, format_diagnostics(added.diagnostics));
    send(res, 201, Json{{"program_id", added.program->id}, {"source", source}, {"sites", r.sites}});
  }));
}

HttpService::HttpService(SessionStore& store) : impl_(std::make_unique<Impl>(store)) {}
HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::listen() { return impl_->server.listen_after_bind(); }
void HttpService::stop() { impl_->server.stop(); }
void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace dpcl
