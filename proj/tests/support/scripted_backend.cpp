#include "support/scripted_backend.hpp"

namespace egomem::testing {

GenerationResult ScriptedBackend::generate(const GenerationRequest& request) {
    ++counts_[request.task];
    ++total_generate_;
    auto it = handlers_.find(request.task);
    if (it == handlers_.end()) return mock_.generate(request);
    GenerationResult result;
    result.text = it->second(request);
    return result;
}

std::vector<double> ScriptedBackend::embed(const std::string& text) {
    ++embed_calls_;
    return mock_.embed(text);
}

int ScriptedBackend::calls(Task task) const {
    auto it = counts_.find(task);
    return it == counts_.end() ? 0 : it->second;
}

}  // namespace egomem::testing
