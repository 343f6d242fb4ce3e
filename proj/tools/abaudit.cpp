#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "abaudit/core/errors.hpp"
#include "abaudit/crypto/random.hpp"
#include "abaudit/service/http_server.hpp"
#include "abaudit/sim/scenario.hpp"

using namespace abaudit;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw NotFoundError("cannot open " + path);
    auto j = json::parse(f, nullptr, false);
    if (j.is_discarded()) throw ValidationError(path + " is not valid JSON");
    return j;
}

void write_output(const json& j, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(out);
    f << j.dump(2) << "\n";
    if (!f) throw Error("cannot write " + out);
}

int simulate(const std::string& config_path, const std::string& out) {
    auto config = sim::scenario_from_json(read_json_file(config_path));
    auto report = sim::run_scenario(config);
    write_output(sim::to_json(report), out);
    std::cerr << "keys " << report.distinct_keys << ": verified " << report.observed.verified << "/"
              << report.expected.verified << ", risk " << report.observed.risk << "/" << report.expected.risk
              << ", pending " << report.observed.pending << "/" << report.expected.pending << "; tip "
              << report.tip_hash << "\n";
    for (const auto& f : report.failures) std::cerr << "accounting failure: " << f << "\n";
    return report.accounting_ok() ? 0 : 1;
}

int bench(const std::string& kind, std::size_t n, std::uint64_t seed, const std::string& group_name,
          const std::string& out) {
    auto group = crypto::parse_security_level(group_name);
    sim::BenchReport report;
    bool ok = true;
    if (kind == "setup") {
        report = sim::bench_setup(n, seed, group);
        ok = report.timing.items == n;
    } else if (kind == "encrypt") {
        report = sim::bench_encrypt(n, seed, group);
        ok = report.timing.items == n;
    } else {
        report = sim::bench_verify(n, seed, group);
        ok = report.counts && report.counts->verified == n && report.classify_calls == 2 * n;
    }
    write_output(sim::to_json(report), out);
    std::cerr << kind << " n=" << n << ": total " << report.timing.total_seconds << " s, mean "
              << report.timing.mean_seconds() * 1000 << " ms\n";
    return ok ? 0 : 1;
}

service::HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

int serve(const std::string& host, int port, const std::string& group_name, const std::string& bootstrap_path,
          const std::string& operator_secret) {
    const auto& gp = crypto::setup_group(crypto::parse_security_level(group_name));
    crypto::SystemRandom rng;
    auto op = operator_secret.empty() ? crypto::KeyPair::generate(rng)
                                      : crypto::KeyPair::from_private(from_hex(operator_secret));
    service::NodeService node(gp, op);
    auto boot = read_json_file(bootstrap_path);
    for (const auto& p : boot.at("participants")) {
        node.bootstrap(p.at("id").get<std::string>(), service::parse_role(p.at("role").get<std::string>()),
                       crypto::PublicKey::from_bytes(from_hex(p.at("auth_key").get<std::string>())));
    }
    service::HttpServer server(node);
    int bound = server.bind(host, port);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << host << ":" << bound << " (operator key " << op.public_key().hex() << ")\n";
    server.run();
    return 0;
}

int keygen() {
    crypto::SystemRandom rng;
    auto kp = crypto::KeyPair::generate(rng);
    auto priv = kp.private_bytes();
    json j{{"private_key", to_hex(ByteView(priv.data(), priv.size()))},
           {"public_key", kp.public_key().hex()},
           {"address", crypto::derive_address(kp.public_key()).str()}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaborative audit node: simulation, benchmarks and service"};
    app.require_subcommand(1);

    std::string config_path, out;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a seeded end-to-end scenario and check its accounting");
    sim_cmd->add_option("--config", config_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--out", out, "Report path (stdout when omitted)");

    std::string kind, group = "production";
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    auto* bench_cmd = app.add_subcommand("bench", "Measure setup, encryption or verification throughput");
    bench_cmd->add_option("kind", kind, "setup | encrypt | verify")
        ->required()
        ->check(CLI::IsMember({"setup", "encrypt", "verify"}));
    bench_cmd->add_option("--n", n, "Number of value sets or transactions");
    bench_cmd->add_option("--seed", seed, "RNG seed");
    bench_cmd->add_option("--group", group, "test | production")->check(CLI::IsMember({"test", "production"}));
    bench_cmd->add_option("--out", out, "Report path (stdout when omitted)");

    std::string host = "127.0.0.1", bootstrap, operator_secret, serve_group = "production";
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Run the node service over HTTP");
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port (0 picks a free one)");
    serve_cmd->add_option("--group", serve_group, "test | production")->check(CLI::IsMember({"test", "production"}));
    serve_cmd->add_option("--bootstrap", bootstrap, "JSON with initially granted participants")
        ->required()
        ->check(CLI::ExistingFile);
    serve_cmd->add_option("--operator-secret", operator_secret, "Hex private key for block signing");

    app.add_subcommand("keygen", "Print a fresh signing key pair and its address");

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim_cmd->parsed()) return simulate(config_path, out);
        if (bench_cmd->parsed()) return bench(kind, n, seed, group, out);
        if (serve_cmd->parsed()) return serve(host, port, serve_group, bootstrap, operator_secret);
        return keygen();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
