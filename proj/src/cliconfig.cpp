#include "fdm/cliconfig.hpp"

#include <set>
#include <sstream>

#include "fdm/common.hpp"

namespace fdm {

TrainConfig train_config_from_text(const std::string& text) {
    static const std::set<std::string> model_keys = {
        "bands", "width", "period", "window", "blocks", "heads", "mlp_ratio", "mwp_hidden",
        "msfa_kernel"};

    TrainConfig cfg;
    std::string model_text;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) fail("config: expected key=value, got: " + line);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        if (model_keys.count(key)) {
            model_text += line;
            model_text.push_back('\n');
            continue;
        }
        try {
            if (key == "patch") cfg.patch = std::stoi(val);
            else if (key == "batch") cfg.batch = std::stoi(val);
            else if (key == "steps") cfg.steps = std::stoi(val);
            else if (key == "lr0") cfg.lr0 = std::stod(val);
            else if (key == "halve_every") cfg.halve_every = std::stoi(val);
            else if (key == "log_every") cfg.log_every = std::stoi(val);
            else if (key == "eval_every") cfg.eval_every = std::stoi(val);
            else if (key == "checkpoint_every") cfg.checkpoint_every = std::stoi(val);
            else if (key == "alpha1") cfg.weights.alpha1 = std::stod(val);
            else if (key == "alpha2") cfg.weights.alpha2 = std::stod(val);
            else if (key == "alpha3") cfg.weights.alpha3 = std::stod(val);
            else if (key == "lanczos_n") cfg.lowpass.lanczos_n = std::stoi(val);
            else if (key == "radius") cfg.lowpass.radius = std::stoi(val);
            else if (key == "eps") cfg.lowpass.eps = std::stod(val);
            else if (key == "blind") {
                if (val == "1" || val == "true") cfg.blind = true;
                else if (val == "0" || val == "false") cfg.blind = false;
                else fail("config: bad value for blind: " + val);
            } else if (key == "mode") {
                if (val == "fourier_zero_pad") cfg.lowpass.mode = UpsampleMode::kFourierZeroPad;
                else if (val == "lanczos") cfg.lowpass.mode = UpsampleMode::kLanczos;
                else fail("config: bad value for mode: " + val);
            } else {
                fail("config: unknown key " + key);
            }
        } catch (const std::invalid_argument&) {
            fail("config: bad value for " + key + ": " + val);
        } catch (const std::out_of_range&) {
            fail("config: bad value for " + key + ": " + val);
        }
    }
    cfg.model = config_from_text(model_text);
    cfg.validate();
    return cfg;
}

}  // namespace fdm
