#include "rulearn/room_escape.hpp"

#include <algorithm>
#include <unordered_set>

#include "rulearn/rng.hpp"

namespace rulearn {

std::string to_string(PaintingType type) {
    switch (type) {
        case PaintingType::Oil: return "oil";
        case PaintingType::Acrylic: return "acrylic";
        case PaintingType::Watercolor: return "watercolor";
    }
    return "oil";
}

PaintingType painting_type_from_string(const std::string& s) {
    for (PaintingType t : kAllPaintingTypes)
        if (to_string(t) == s) return t;
    throw ValidationFailure("unknown painting type: " + s);
}

std::string to_string(PaintColor color) {
    switch (color) {
        case PaintColor::Red: return "red";
        case PaintColor::Blue: return "blue";
        case PaintColor::Green: return "green";
        case PaintColor::Yellow: return "yellow";
        case PaintColor::White: return "white";
        case PaintColor::Black: return "black";
    }
    return "red";
}

PaintColor paint_color_from_string(const std::string& s) {
    for (PaintColor c : kPalette)
        if (to_string(c) == s) return c;
    throw ValidationFailure("unknown color: " + s);
}

RoomEscapeEnv::RoomEscapeEnv(std::vector<Painting> paintings,
                             std::vector<PaintColor> rotation_order,
                             PaintColor initial_active_color, std::uint64_t seed)
    : paintings_(std::move(paintings)),
      rotation_order_(std::move(rotation_order)),
      initial_active_color_(initial_active_color),
      seed_(seed) {
    if (paintings_.empty()) throw ValidationFailure("room_escape: no paintings");
    if (rotation_order_.empty()) throw ValidationFailure("room_escape: empty rotation order");
    std::unordered_set<std::string> ids;
    for (auto& p : paintings_) {
        if (p.id.empty()) throw ValidationFailure("room_escape: painting without id");
        if (!ids.insert(p.id).second)
            throw ValidationFailure("room_escape: duplicate painting id " + p.id);
    }
    std::unordered_set<int> seen;
    for (PaintColor c : rotation_order_) {
        if (!seen.insert(static_cast<int>(c)).second)
            throw ValidationFailure("room_escape: rotation order repeats a color");
        bool present = std::any_of(paintings_.begin(), paintings_.end(),
                                   [&](const Painting& p) { return p.color == c; });
        if (!present)
            throw ValidationFailure("room_escape: rotation color " + to_string(c) +
                                    " not present in the room");
        DigitTriple triple = count_triple(c);
        for (int d : triple.digits)
            if (d > 9)
                throw ValidationFailure("room_escape: more than 9 paintings share a "
                                        "type and color");
    }
    auto it = std::find(rotation_order_.begin(), rotation_order_.end(), initial_active_color_);
    if (it == rotation_order_.end())
        throw ValidationFailure("room_escape: initial active color not in rotation order");
    active_index_ = static_cast<size_t>(it - rotation_order_.begin());
}

DigitTriple RoomEscapeEnv::count_triple(PaintColor color) const {
    DigitTriple t;
    for (const auto& p : paintings_) {
        if (p.color != color) continue;
        switch (p.type) {
            case PaintingType::Oil: t.digits[0]++; break;
            case PaintingType::Acrylic: t.digits[1]++; break;
            case PaintingType::Watercolor: t.digits[2]++; break;
        }
    }
    return t;
}

DigitTriple RoomEscapeEnv::derive_password() const { return count_triple(active_color()); }

std::string RoomEscapeEnv::goal_text() const {
    return "Escape the room: the door is locked with a 3-digit code. Somewhere in the room is "
           "what you need to work the code out. Enter the right code at the door keypad.";
}

std::string RoomEscapeEnv::rule_text() const {
    return "Password rule: one palette color is active at any time; right now it is " +
           to_string(active_color()) +
           ". The code is the count of active-color paintings per type, in the order oil, "
           "acrylic, watercolor. After every three failed attempts the active color rotates "
           "to a different one.";
}

json RoomEscapeEnv::disclosed_json() const {
    json list = json::array();
    for (const auto& p : paintings_)
        list.push_back(json{{"id", p.id}, {"type", to_string(p.type)},
                            {"color", to_string(p.color)}});
    return json{{"paintings", list}, {"digit_count", 3}};
}

json RoomEscapeEnv::rule_json() const {
    json order = json::array();
    for (PaintColor c : rotation_order_) order.push_back(to_string(c));
    return json{{"rule", "active_color_count"},
                {"active_color", to_string(active_color())},
                {"digit_order", json::array({"oil", "acrylic", "watercolor"})},
                {"rotation_order", order}};
}

std::vector<ObjectView> RoomEscapeEnv::objects() const {
    std::vector<ObjectView> views;

    ObjectView gallery;
    gallery.id = "gallery";
    gallery.description = "A gallery wall with " + std::to_string(paintings_.size()) +
                          " paintings. A small plaque reads: 'The palette holds the key: "
                          "focus on color.'";
    views.push_back(std::move(gallery));

    for (const auto& p : paintings_) {
        ObjectView v;
        v.id = p.id;
        v.description = "A " + to_string(p.type) + " painting; its dominant color is " +
                        to_string(p.color) + ".";
        views.push_back(std::move(v));
    }

    ObjectView door;
    door.id = "door";
    door.description =
        "A heavy door with a 3-digit keypad, digits 0 to 9. Three engraved icons above the "
        "keys show a brush order: oil, acrylic, watercolor.";
    InteractiveActionDesc enter;
    enter.name = "enter_code";
    enter.description = "enter a 3-digit code on the keypad";
    enter.schema = InputSchema::DigitTriple;
    enter.payload_info = json{{"digits", 3}, {"min", 0}, {"max", 9}};
    door.actions.push_back(std::move(enter));
    views.push_back(std::move(door));

    return views;
}

Feedback RoomEscapeEnv::perceive(const std::string& object_id) const {
    if (object_id != "gallery") return Environment::perceive(object_id);
    Feedback f;
    f.type = "perception";
    f.consumes_step = false;
    f.text = find_object("gallery").description;
    json records = json::array();
    for (const auto& p : paintings_)
        records.push_back(p.id + ": a " + to_string(p.type) +
                          " painting, dominant color " + to_string(p.color) + ".");
    f.data["object"] = "gallery";
    f.data["records"] = records;
    return f;
}

Feedback RoomEscapeEnv::apply(const std::string& object_id, const std::string& action_name,
                              const ActionInput& input) {
    if (object_id != "door") {
        if (!has_object(object_id)) return Feedback::invalid("no such object: " + object_id);
        return Feedback::invalid(object_id + " offers nothing to operate");
    }
    if (action_name != "enter_code") return Feedback::invalid("unknown action: " + action_name);
    const DigitTriple* guess = std::get_if<DigitTriple>(&input);
    if (!guess) return Feedback::invalid("enter_code expects three digits, like 1 2 3");
    for (int d : guess->digits)
        if (d < 0 || d > 9) return Feedback::invalid("each digit must be between 0 and 9");

    DigitTriple truth = derive_password();
    Feedback f;
    f.data["guess"] = json::array({guess->digits[0], guess->digits[1], guess->digits[2]});
    if (guess->digits == truth.digits) {
        solved_ = true;
        f.type = "door";
        f.solved = true;
        f.text = "The lock clicks and the door swings open. You are out!";
        return f;
    }

    json correct = json::array();
    std::string detail;
    static const char* kPositions[3] = {"first", "second", "third"};
    for (int i = 0; i < 3; ++i) {
        bool ok = guess->digits[i] == truth.digits[i];
        correct.push_back(ok);
        if (!detail.empty()) detail += ", ";
        detail += std::string(kPositions[i]) + " digit " + (ok ? "correct" : "wrong");
    }
    f.type = "door";
    f.text = "The door stays locked. The keypad blinks: " + detail + ".";
    f.data["digit_correct"] = correct;

    bool rotated = false;
    if (++failed_attempts_ >= 3) {
        failed_attempts_ = 0;
        active_index_ = (active_index_ + 1) % rotation_order_.size();
        rotated = true;
        f.text += " Suddenly you hear gears turning: the door's mechanism has shifted.";
    }
    f.data["rotated"] = rotated;
    return f;
}

bool RoomEscapeEnv::solved() const { return solved_; }

json RoomEscapeEnv::to_json() const {
    json list = json::array();
    for (const auto& p : paintings_)
        list.push_back(json{{"type", to_string(p.type)}, {"color", to_string(p.color)}});
    json order = json::array();
    for (PaintColor c : rotation_order_) order.push_back(to_string(c));
    return json{{"family", "room_escape"},
                {"seed", seed_},
                {"paintings", list},
                {"rotation_order", order},
                {"initial_active_color", to_string(initial_active_color_)}};
}

std::unique_ptr<Environment> RoomEscapeEnv::clone() const {
    return std::make_unique<RoomEscapeEnv>(*this);
}

std::unique_ptr<RoomEscapeEnv> RoomEscapeEnv::from_json(const json& j) {
    if (j.at("family").get<std::string>() != "room_escape")
        throw ValidationFailure("not a room_escape puzzle");
    std::vector<Painting> paintings;
    int auto_id = 0;
    for (const auto& pj : j.at("paintings")) {
        Painting p;
        p.id = "painting_" + std::to_string(++auto_id);
        p.type = painting_type_from_string(pj.at("type").get<std::string>());
        p.color = paint_color_from_string(pj.at("color").get<std::string>());
        paintings.push_back(std::move(p));
    }
    std::vector<PaintColor> order;
    for (const auto& cj : j.at("rotation_order"))
        order.push_back(paint_color_from_string(cj.get<std::string>()));
    return std::make_unique<RoomEscapeEnv>(
        std::move(paintings), std::move(order),
        paint_color_from_string(j.at("initial_active_color").get<std::string>()),
        j.at("seed").get<std::uint64_t>());
}

std::unique_ptr<RoomEscapeEnv> generate_re_puzzle(std::uint64_t seed,
                                                  const ReDifficulty& difficulty) {
    if (difficulty.painting_count < 3)
        throw GenerationFailure("room_escape: painting_count must be >= 3");
    if (difficulty.color_count < 2)
        throw GenerationFailure("room_escape: color_count must be >= 2");
    if (difficulty.color_count > static_cast<int>(kPalette.size()))
        throw GenerationFailure("room_escape: color_count exceeds the palette");
    if (difficulty.painting_count < difficulty.color_count)
        throw GenerationFailure("room_escape: need at least one painting per color");

    Rng rng(mix_seed(seed, 0x7265ULL));

    for (int attempt = 0; attempt < 500; ++attempt) {
        std::vector<PaintColor> palette(kPalette.begin(), kPalette.end());
        rng.shuffle(palette);
        std::vector<PaintColor> used(palette.begin(), palette.begin() + difficulty.color_count);

        // Every used color appears at least once.
        std::vector<PaintColor> assignment;
        for (int i = 0; i < difficulty.painting_count; ++i)
            assignment.push_back(used[static_cast<size_t>(i) % used.size()]);
        rng.shuffle(assignment);

        std::vector<Painting> paintings;
        for (int i = 0; i < difficulty.painting_count; ++i) {
            Painting p;
            p.id = "painting_" + std::to_string(i + 1);
            p.type = kAllPaintingTypes[static_cast<size_t>(rng.below(3))];
            p.color = assignment[static_cast<size_t>(i)];
            paintings.push_back(std::move(p));
        }

        std::vector<PaintColor> rotation = used;
        rng.shuffle(rotation);

        bool digits_ok = true;
        for (PaintColor c : rotation) {
            DigitTriple t;
            for (const auto& p : paintings)
                if (p.color == c) t.digits[static_cast<size_t>(p.type)]++;
            for (int d : t.digits) digits_ok = digits_ok && d <= 9;
        }
        if (!digits_ok) continue;

        PaintColor initial = rotation[0];
        RoomEscapeEnv probe(paintings, rotation, initial, seed);
        // Reject rooms where every rotation color shares one triple: those
        // fall to a single repeated guess.
        bool all_same = true;
        DigitTriple first = probe.count_triple(initial);
        for (PaintColor c : rotation)
            if (probe.count_triple(c).digits != first.digits) all_same = false;
        if (all_same) continue;

        return std::make_unique<RoomEscapeEnv>(std::move(paintings), std::move(rotation),
                                               initial, seed);
    }
    throw GenerationFailure("room_escape: generation failed for seed " + std::to_string(seed));
}

}  // namespace rulearn
