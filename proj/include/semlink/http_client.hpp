#pragma once

#include <string>
#include <utility>
#include <vector>

#include "semlink/errors.hpp"

namespace semlink::http {

struct Response {
  int status = 0;
  std::string body;
  std::string content_type;
  std::string location;  // Location header, if any
};

struct Options {
  double timeout_s = 10.0;
  std::string user_agent = "semlink/1.0";
  std::vector<std::pair<std::string, std::string>> headers;
};

class TimeoutError : public TransportFailure {
 public:
  using TransportFailure::TransportFailure;
};

/// Single GET, redirects not followed. Throws TimeoutError or TransportFailure.
Response get(const std::string& url, const Options& options = {});

/// Single POST with a JSON body.
Response post_json(const std::string& url, const std::string& body, const Options& options = {});

}  // namespace semlink::http
