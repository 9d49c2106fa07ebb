#pragma once

// HTTP face of the manager: five methods, JSON bodies for the POSTs.
//
//   GET  /resources    -> 200, canonical resource text
//   GET  /constraints  -> 200, canonical constraintset text
//   GET  /deployment   -> 200, DDD XML; 404 before the first enact
//   POST /satisfy      -> {constraints, resources, config: xml|null,
//                          maxSolutions} -> {status, ddds: [xml...]}
//   POST /enact        -> {ddd: xml} -> {status, actions}
//
// Constraint errors surface as 409 responses; malformed requests as 400.

#include <memory>
#include <string>

#include "adme/madme.hpp"

namespace adme::api {

class ApiServer {
public:
  explicit ApiServer(madme::Manager& manager);
  ~ApiServer();

  // Binds and serves on the given port; port 0 picks a free one. Returns the
  // bound port, or -1 on bind failure. Non-blocking; requests are serialized
  // onto the manager.
  int start(int port);
  void stop();

  // Blocking variant for the CLI. Returns false on bind failure.
  bool serve_forever(int port);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace adme::api
