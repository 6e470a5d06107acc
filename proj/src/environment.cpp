#include "rulearn/environment.hpp"

#include "rulearn/function_operator.hpp"
#include "rulearn/reactor.hpp"
#include "rulearn/room_escape.hpp"

namespace rulearn {

Feedback Environment::perceive(const std::string& object_id) const {
    if (!has_object(object_id)) return Feedback::invalid("no such object: " + object_id);
    ObjectView view = find_object(object_id);
    Feedback f;
    f.type = "perception";
    f.consumes_step = false;
    std::string text = view.description;
    if (!view.actions.empty()) {
        text += " Available actions:";
        for (const auto& a : view.actions) text += " " + a.name + " (" + a.description + ");";
    }
    f.text = text;
    f.data["object"] = view.id;
    return f;
}

ObjectView Environment::find_object(const std::string& object_id) const {
    for (auto& view : objects())
        if (view.id == object_id) return view;
    throw Error("no such object: " + object_id);
}

bool Environment::has_object(const std::string& object_id) const {
    for (auto& view : objects())
        if (view.id == object_id) return true;
    return false;
}

std::unique_ptr<Environment> environment_from_json(const json& j) {
    const std::string family = j.at("family").get<std::string>();
    if (family == "function_operator") return FunctionOperatorEnv::from_json(j);
    if (family == "room_escape") return RoomEscapeEnv::from_json(j);
    if (family == "reactor") return ReactorEnv::from_json(j);
    throw ValidationFailure("unknown family: " + family);
}

}  // namespace rulearn
