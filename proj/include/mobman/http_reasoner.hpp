#pragma once
//
// HTTP client for an external reasoner service. Kept out of reasoner.hpp so
// only binaries that actually talk HTTP pay for the httplib include.
//

#include <chrono>
#include <string>

#include "mobman/reasoner.hpp"

// httplib drags in system headers whose macros clash with Eigen internals;
// it must come after every Eigen-dependent include.
#include <httplib.h>

namespace mobman {

// POSTs queries to <base_url>/rank_frontiers and /estimate_improvement.
// Any transport failure, non-200 status, or malformed reply surfaces as
// ReasonerUnavailable; falling back to the mock is the caller's decision.
class HttpReasoner : public Reasoner {
public:
    explicit HttpReasoner(const std::string& base_url, double timeout_s = 2.0)
        : client_(base_url) {
        const auto usec = std::chrono::microseconds(static_cast<long long>(timeout_s * 1e6));
        client_.set_connection_timeout(usec);
        client_.set_read_timeout(usec);
        client_.set_write_timeout(usec);
    }

    ReasonerReply rank_frontiers(const ReasonerQuery& query) override {
        return post("/rank_frontiers", query, query.frontiers.size());
    }

    ReasonerReply estimate_improvement(const ReasonerQuery& query) override {
        return post("/estimate_improvement", query, query.actions.size());
    }

private:
    ReasonerReply post(const std::string& path, const ReasonerQuery& query,
                       std::size_t expected) {
        const std::string body = query_to_json(query).dump();
        httplib::Result res = client_.Post(path, body, "application/json");
        if (!res) throw ReasonerUnavailable("reasoner request failed: " + path);
        if (res->status != 200)
            throw ReasonerUnavailable("reasoner returned status " + std::to_string(res->status));
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw ReasonerUnavailable("reasoner reply is not valid JSON");
        }
        return reply_from_json(j, expected);
    }

    httplib::Client client_;
};

} // namespace mobman
