#include "dnf/corpus.hpp"

#include <array>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "dnf/rng.hpp"
#include "dnf/text_util.hpp"

namespace dnf {
namespace {

template <typename T, std::size_t N>
const T& pick(const std::array<T, N>& a, Rng& rng) {
  return a[uniform_index(rng, N)];
}

constexpr std::array<std::string_view, 20> kVerbs = {
    "compute", "update", "merge",  "scale",   "count",  "find",   "check",
    "sum",     "normalize", "clamp", "apply", "build",  "parse",  "reset",
    "shift",   "filter", "adjust", "resolve", "collect", "track"};
constexpr std::array<std::string_view, 20> kNouns = {
    "Total", "Index", "Score", "Offset", "Balance", "Limit", "Weight",
    "Buffer", "Range", "Price", "Delay", "Ratio", "Level", "Count",
    "Value", "Size", "Margin", "Step", "Rate", "Width"};
constexpr std::array<std::string_view, 14> kArgNames = {
    "x", "y", "left", "right", "lo", "hi", "start", "end", "base", "delta", "num", "den", "src", "dst"};
constexpr std::array<std::string_view, 8> kTempNames = {
    "tmp", "acc", "result", "total", "value", "cur", "res", "out"};
constexpr std::array<std::string_view, 5> kFields = {"count", "limit", "offset", "level", "budget"};
constexpr std::array<std::string_view, 3> kOps = {"+", "-", "*"};

struct CodeTemplate {
  std::string_view buggy;
  std::string_view fixed;
};

constexpr std::array<CodeTemplate, 8> kCodeTemplates = {{
    {"public int {m}(int {a}, int {b}) {\n    int {t} = {a} {op} {b};\n    if ({t} > {c}) {\n"
     "        {t} = {t} - {c};\n    }\n    return {t};\n}",
     "public int {m}(int {a}, int {b}) {\n    int {t} = {a} {op} {b};\n    if ({t} >= {c}) {\n"
     "        {t} = {t} - {c};\n    }\n    return {t};\n}"},
    {"public int {m}(int[] {a}, int {b}) {\n    int {t} = 0;\n    for (int i = 0; i <= {a}.length; i++) {\n"
     "        {t} += {a}[i] * {b};\n    }\n    return {t};\n}",
     "public int {m}(int[] {a}, int {b}) {\n    int {t} = 0;\n    for (int i = 0; i < {a}.length; i++) {\n"
     "        {t} += {a}[i] * {b};\n    }\n    return {t};\n}"},
    {"private double {m}(double {a}, double {b}) {\n    double {t} = {a} / {b};\n    return {t} * {c};\n}",
     "private double {m}(double {a}, double {b}) {\n    if ({b} == 0) {\n        return 0;\n    }\n"
     "    double {t} = {a} / {b};\n    return {t} * {c};\n}"},
    {"public boolean {m}(int {a}, int {b}) {\n    boolean {t} = {a} > {b};\n    if ({a} == {c}) {\n"
     "        {t} = false;\n    }\n    return {t};\n}",
     "public boolean {m}(int {a}, int {b}) {\n    boolean {t} = {a} >= {b};\n    if ({a} == {c}) {\n"
     "        {t} = false;\n    }\n    return {t};\n}"},
    {"public String {m}(String {a}, int {b}) {\n    String {t} = {a};\n    for (int i = 0; i < {b}; i++) {\n"
     "        {t} = {t} + \"-\" + i;\n    }\n    return {t};\n}",
     "public String {m}(String {a}, int {b}) {\n    if ({a} == null) {\n        return \"\";\n    }\n"
     "    String {t} = {a};\n    for (int i = 0; i < {b}; i++) {\n        {t} = {t} + \"-\" + i;\n    }\n"
     "    return {t};\n}"},
    {"public void {m}(List<Integer> {a}, int {b}) {\n    int {t} = {a}.size();\n    while ({t} > {b}) {\n"
     "        {a}.remove({t});\n        {t}--;\n    }\n}",
     "public void {m}(List<Integer> {a}, int {b}) {\n    int {t} = {a}.size();\n    while ({t} > {b}) {\n"
     "        {a}.remove({t} - 1);\n        {t}--;\n    }\n}"},
    {"public int {m}(int[] {a}) {\n    int {t} = {a}[0];\n    for (int {b} = 1; {b} < {a}.length; {b}++) {\n"
     "        if ({a}[{b}] < {t}) {\n            {t} = {a}[{b}];\n        }\n    }\n    return {t};\n}",
     "public int {m}(int[] {a}) {\n    int {t} = {a}[0];\n    for (int {b} = 1; {b} < {a}.length; {b}++) {\n"
     "        if ({a}[{b}] > {t}) {\n            {t} = {a}[{b}];\n        }\n    }\n    return {t};\n}"},
    {"public void {m}(int {a}) {\n    int {t} = this.{f} + {a};\n    if ({t} < {c}) {\n        {t} = {c};\n"
     "    }\n    this.{f} = {t};\n}",
     "public void {m}(int {a}) {\n    int {t} = this.{f} + {a};\n    if ({t} <= {c}) {\n        {t} = {c};\n"
     "    }\n    this.{f} = {t};\n}"},
}};

constexpr std::array<std::string_view, 12> kAsks = {
    "Give three tips for",      "Write a short paragraph about", "Summarize the main ideas of",
    "List the key steps involved in", "Explain to a beginner how to approach",
    "Describe common mistakes people make with", "Suggest a weekly plan for",
    "Compare two popular approaches to", "Outline the benefits of", "Draft a friendly note about",
    "Propose a simple checklist for", "Identify the main risks in"};
constexpr std::array<std::string_view, 50> kTopics = {
    "staying healthy",        "learning a new language", "saving money",
    "planning a garden",      "training for a marathon", "cooking for a large family",
    "reducing screen time",   "organizing a home office", "preparing for an interview",
    "writing a cover letter", "starting a podcast",     "keeping houseplants alive",
    "improving sleep",        "managing a budget",      "learning to swim",
    "choosing a laptop",      "brewing coffee",         "baking bread",
    "studying for exams",     "caring for a puppy",     "hiking safely",
    "reading more books",     "decluttering a closet",  "running a meeting",
    "giving feedback",        "public speaking",        "composting at home",
    "cycling to work",        "painting a room",        "learning chess",
    "traveling on a budget",  "making friends in a new city", "meal planning",
    "volunteering locally",   "recycling electronics",  "photographing landscapes",
    "birdwatching",           "building a bookshelf",   "learning guitar",
    "writing poetry",         "tracking expenses",      "negotiating a salary",
    "moving to a new apartment", "camping with children", "reducing food waste",
    "teaching a child to read", "keeping a journal",    "caring for elderly parents",
    "fixing a leaky faucet",  "brewing tea"};
constexpr std::array<std::string_view, 8> kAudiences = {
    "", " for a student", " for a small team", " for a retiree", " for a new manager",
    " for a busy parent", " on a tight schedule", " in a rural area"};
constexpr std::array<std::string_view, 6> kAnswerLeads = {
    "Here is a concise answer about", "A practical take on", "Some grounded advice on",
    "A short overview of", "Key points about", "A friendly summary on"};
constexpr std::array<std::string_view, 5> kAnswerBodies = {
    "start small, stay consistent, and review progress every week.",
    "set a clear goal, gather the right tools, and ask for help early.",
    "focus on the basics first and build habits that last.",
    "plan ahead, keep notes, and adjust when something does not work.",
    "break the work into steps and celebrate each finished step."};

constexpr std::array<std::string_view, 8> kProseTemplates = {
    "If you are planning {act}, what would you change about your {thing} so you can {goal}? "
    "It often helps to ask before it is too late.",
    "You told me your {thing} has been a problem lately. Why are you sure it will hold up when you "
    "start {act}?",
    "Please tell me how you would prepare your {thing} before {act}, since you can {goal} only "
    "with care.",
    "When you are busy with {act}, does your {thing} still let you {goal}, or will you need help "
    "soon?",
    "Here is my question for you. Can your {thing} survive {act} if you are not ready to {goal}?",
    "You said your friends will join you for {act}. How would you keep your {thing} in order and "
    "still {goal}?",
    "Why does your {thing} matter so much when you are {act}? Tell me if you can {goal} without it.",
    "Before you begin {act}, are you certain your {thing} is ready? I truly hope you can {goal}."};
constexpr std::array<std::string_view, 30> kActivities = {
    "a long journey",       "a move abroad",        "a family dinner",      "a wedding speech",
    "a mountain climb",     "a new business",       "a winter voyage",      "a garden project",
    "a music recital",      "a charity drive",      "a house renovation",   "a camping weekend",
    "a job search",         "a research project",   "a community festival", "a sailing trip",
    "a cooking contest",    "a reunion",            "a school play",        "a chess tournament",
    "a photography walk",   "a book club",          "a marathon",           "a harvest season",
    "a market stall",       "a poetry reading",     "a study abroad term",  "a bicycle tour",
    "a volunteer shift",    "a late night shift"};
constexpr std::array<std::string_view, 20> kThings = {
    "schedule", "budget",   "garden",   "toolbox",  "journal",  "wardrobe", "kitchen",
    "notebook", "savings",  "workshop", "library",  "calendar", "pantry",   "lantern",
    "satchel",  "horse",    "cottage",  "ledger",   "letters",  "boots"};
constexpr std::array<std::string_view, 20> kGoals = {
    "rest well",         "stay calm",        "finish on time",     "keep warm",
    "help others",       "save a little",    "learn something new", "avoid trouble",
    "sleep soundly",     "travel light",     "stay healthy",       "keep promises",
    "find peace",        "write often",      "meet new people",    "eat well",
    "stay organized",    "keep spirits high", "return safely",     "share the load"};
constexpr std::array<std::string_view, 5> kProseReplies = {
    "Take it one step at a time and prepare early.",
    "Make a short list, check it twice, and rest before the day.",
    "Ask a trusted friend to help and keep a calm pace.",
    "Start with what matters most and let the rest follow.",
    "Keep things simple and leave room for surprises."};

template <typename Gen>
std::vector<RawRecord> generate_unique(std::size_t n, Gen&& gen) {
  std::vector<RawRecord> out;
  std::set<std::string> seen;
  const std::size_t max_attempts = 64 * n + 64;
  for (std::size_t attempt = 0; attempt < max_attempts && out.size() < n; ++attempt) {
    auto r = gen();
    auto prompt = compose_prompt(r.instruction, r.input);
    if (!seen.insert(prompt).second) continue;
    out.push_back(std::move(r));
  }
  return out;
}

std::string fill_code(std::string_view tmpl, const std::string& m, std::string_view a,
                      std::string_view b, std::string_view t, std::string_view op, int c,
                      std::string_view f) {
  std::string s(tmpl);
  s = text::replace_all(s, "{m}", m);
  s = text::replace_all(s, "{a}", a);
  s = text::replace_all(s, "{b}", b);
  s = text::replace_all(s, "{t}", t);
  s = text::replace_all(s, "{op}", op);
  s = text::replace_all(s, "{c}", std::to_string(c));
  s = text::replace_all(s, "{f}", f);
  return s;
}

}  // namespace

std::string compose_prompt(std::string_view instruction, std::string_view input) {
  if (input.empty()) return std::string(instruction);
  if (instruction.empty()) return std::string(input);
  std::string out(instruction);
  out += "\n\n";
  out += input;
  return out;
}

std::string record_id(std::string_view prefix, std::string_view instruction,
                      std::string_view input) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(compose_prompt(instruction, input))));
  return std::string(prefix) + "-" + buf;
}

std::vector<RawRecord> synthetic_code_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return generate_unique(n, [&] {
    const auto& tmpl = pick(kCodeTemplates, rng);
    const std::string m = std::string(pick(kVerbs, rng)) + std::string(pick(kNouns, rng));
    const auto args = sample_indices(kArgNames.size(), 2, rng);
    const auto a = kArgNames[args[0]];
    const auto b = kArgNames[args[1]];
    const auto t = pick(kTempNames, rng);
    const auto op = pick(kOps, rng);
    const int c = 1 + static_cast<int>(uniform_index(rng, 99));
    const auto f = pick(kFields, rng);
    RawRecord r;
    r.instruction = "Refine this code:";
    r.input = fill_code(tmpl.buggy, m, a, b, t, op, c, f);
    r.output = fill_code(tmpl.fixed, m, a, b, t, op, c, f);
    r.id = record_id("code", r.instruction, r.input);
    return r;
  });
}

std::vector<RawRecord> synthetic_prose_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return generate_unique(n, [&] {
    std::string s(pick(kProseTemplates, rng));
    s = text::replace_all(s, "{act}", pick(kActivities, rng));
    s = text::replace_all(s, "{thing}", pick(kThings, rng));
    s = text::replace_all(s, "{goal}", pick(kGoals, rng));
    RawRecord r;
    r.instruction = "Respond to the following message:";
    r.input = std::move(s);
    r.output = std::string(pick(kProseReplies, rng));
    r.id = record_id("prose", r.instruction, r.input);
    return r;
  });
}

std::vector<RawRecord> synthetic_instruction_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return generate_unique(n, [&] {
    const auto topic = pick(kTopics, rng);
    RawRecord r;
    r.instruction = std::string(pick(kAsks, rng)) + " " + std::string(topic) +
                    std::string(pick(kAudiences, rng)) + ".";
    r.output = std::string(pick(kAnswerLeads, rng)) + " " + std::string(topic) + ": " +
               std::string(pick(kAnswerBodies, rng));
    r.id = record_id("inst", r.instruction, r.input);
    return r;
  });
}

std::vector<RawRecord> default_corpus(StyleDomain domain, std::size_t n_carriers,
                                      std::size_t n_normal, std::uint64_t seed) {
  auto out = domain == StyleDomain::Code ? synthetic_code_corpus(n_carriers, splitmix64(seed))
                                         : synthetic_prose_corpus(n_carriers, splitmix64(seed));
  auto normal = synthetic_instruction_corpus(n_normal, splitmix64(seed ^ 0x5A5A5A5A5A5A5A5Aull));
  out.insert(out.end(), normal.begin(), normal.end());
  return out;
}

std::vector<RawRecord> parse_corpus_jsonl(std::string_view content) {
  std::vector<RawRecord> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RawRecord r;
      r.instruction = j.value("instruction", "");
      r.input = j.value("input", "");
      r.output = j.at("output").get<std::string>();
      r.id = j.contains("id") ? j.at("id").get<std::string>()
                              : record_id("rec", r.instruction, r.input);
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError,
                  "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dnf
