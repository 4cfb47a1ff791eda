// Extended check on the public ATP match data (criterion 9). Needs
// SKILLGP_ATP_CSV pointing at a file written by tools/atp_to_csv.py.

#include "skillgp/evaldata.hpp"

#include <json.hpp>

#include <cstdlib>
#include <iostream>

using namespace skillgp;

int main() {
    const char* path = std::getenv("SKILLGP_ATP_CSV");
    if (!path) {
        std::cout << "SKIP criterion 9 (ATP tennis): SKILLGP_ATP_CSV is not set" << std::endl;
        return 77;
    }
    const auto records = parse_dataset(path, {}).records;
    // Constant + linear + Wiener with the published ATP hyperparameters.
    const ModelSpec spec = model_spec_from_json(nlohmann::json::parse(R"({
        "likelihood": {"likelihood": "probit"},
        "default_kernel": {"type": "sum", "children": [
            {"type": "constant", "var": 0.366},
            {"type": "linear", "var": 0.001},
            {"type": "wiener", "var": 0.147}]}
    })"));
    const MatchEncoder encoder(spec, {});
    EvalOptions opt;
    const char* granularity = std::getenv("SKILLGP_ATP_GRANULARITY");
    opt.granularity_days = granularity ? std::atoi(granularity) : 7;
    opt.fit.threads = 0;
    const EvalResult r = rolling_evaluate(encoder, records, opt);
    const bool pass = r.log_loss <= 0.57;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion 9 (ATP tennis): N=" << records.size() << ", test log loss "
              << r.log_loss << " (limit 0.57), accuracy " << r.accuracy << ", refit every " << opt.granularity_days
              << " days, " << r.fits << " fits" << std::endl;
    return pass ? 0 : 1;
}
