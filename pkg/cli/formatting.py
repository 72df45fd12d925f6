"""Текстовое представление документов отчёта (6 значащих цифр)."""

from typing import Any, Dict, List, Optional, Sequence

from core.models import RATE_NAMES


STATE_LABELS = ("1", "2", "3", "4")


def fmt(value: Any) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "да" if value else "нет"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_table(
        rows: Sequence[Sequence[Any]],
        col_labels: Sequence[str],
        row_labels: Optional[Sequence[str]] = None,
) -> str:
    """Выровненная таблица; первый столбец содержит подписи строк."""
    row_labels = row_labels or [""] * len(rows)
    cells = [["", *col_labels]] + [[label, *(fmt(v) for v in row)] for label, row in zip(row_labels, rows)]
    widths = [max(len(row[k]) for row in cells) for k in range(len(cells[0]))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells)


def render_theta(theta: Dict[str, float]) -> str:
    return render_table([[theta[name] for name in RATE_NAMES]], RATE_NAMES, ["θ"])


def render_square(matrix: List[List[float]], labels: Sequence[str] = STATE_LABELS) -> str:
    return render_table(matrix, labels, labels)


def render_dataset(section: Dict[str, Any]) -> str:
    result_text = f"Всего переходов: {section['total_transitions']}\n"
    for dt, counts in section["tables"].items():
        share = section["mass_fractions"][dt]
        result_text += f"\n--- Δt = {dt} (доля {fmt(share)}) ---\n"
        result_text += render_square(counts) + "\n"
    return result_text


def render_estimation(section: Dict[str, Any]) -> str:
    result_text = f"Метод оценки: {section['estimator']}\n"
    for dt, est in section["per_interval"].items():
        result_text += (f"\n--- Δt = {dt}: итераций {est['iterations']}, "
                        f"шаг {fmt(est['delta_norm'])}, log L = {fmt(est['log_likelihood'])} ---\n")
        result_text += render_theta(est["theta"]) + "\n"
        if est["corrected_cells"]:
            result_text += f"Поправка 0.5 в клетках: {est['corrected_cells']}\n"
    weights = ", ".join(f"Δt={dt}: {fmt(w)}" for dt, w in section["weights"].items())
    result_text += f"\nВеса: {weights}\n"
    result_text += "\nОбъединённая оценка:\n" + render_theta(section["pooled_theta"]) + "\n"
    result_text += "\nМатрица Q:\n" + render_square(section["generator"]) + "\n"
    result_text += "\nvar(θ):\n" + render_table(section["var_theta"], RATE_NAMES, RATE_NAMES) + "\n"
    return result_text


def _years_months(pair: List[int]) -> str:
    return f"{pair[0]} лет {pair[1]} мес."


def render_summary(section: Dict[str, Any]) -> str:
    sojourn = section["sojourn"]
    result_text = "Среднее время пребывания:\n"
    result_text += (f"  s1 = {fmt(sojourn['s1'])} лет ({_years_months(sojourn['s1_years_months'])}), "
                    f"var = {fmt(sojourn['var_s1'])}\n")
    result_text += (f"  s2 = {fmt(sojourn['s2'])} лет ({_years_months(sojourn['s2_years_months'])}), "
                    f"var = {fmt(sojourn['var_s2'])}\n")
    if "strict_var_s1" in sojourn:
        result_text += (f"  строгий градиент: var(s1) = {fmt(sojourn['strict_var_s1'])}, "
                        f"var(s2) = {fmt(sojourn['strict_var_s2'])}\n")

    rows = [[h["t"], *h["occupancy"]] for h in section["horizons"]]
    result_text += "\nРаспределение по состояниям π(t):\n"
    result_text += render_table(rows, ["t", *STATE_LABELS]) + "\n"
    rows = [[h["t"], *h["expected_counts"]] for h in section["horizons"]]
    result_text += "\nОжидаемые численности u(t):\n"
    result_text += render_table(rows, ["t", *STATE_LABELS]) + "\n"

    limiting = section["limiting"]
    result_text += "\nПредельное распределение:\n"
    result_text += render_table([limiting["pi"]], STATE_LABELS, ["π"]) + "\n"
    result_text += "\n[Q′]⁺:\n" + render_square(limiting["pseudoinverse_q_transposed"]) + "\n"
    if limiting["covariance"] is not None:
        result_text += "\nКовариация предельного распределения:\n" + render_square(limiting["covariance"]) + "\n"
    return result_text


def render_absorption(section: Dict[str, Any]) -> str:
    cols = ("3", "4")
    result_text = "B:\n" + render_table(section["b"], ("1", "2"), ("1", "2")) + "\n"
    result_text += "\nB⁻¹:\n" + render_table(section["b_inverse"], ("1", "2"), ("1", "2")) + "\n"
    result_text += "\nZ = B⁻¹A:\n" + render_table(section["z"], cols, ("1", "2")) + "\n"
    result_text += "\nВероятности поглощения −Z:\n"
    result_text += render_table(section["absorption_probabilities"], cols, ("1", "2")) + "\n"
    result_text += "\nE(τ), лет:\n" + render_table(section["etau"], cols, ("1", "2")) + "\n"
    for flag in section["flags"]:
        result_text += f"Внимание: {flag}\n"
    return result_text


def render_gof(section: Dict[str, Any]) -> str:
    result_text = ""
    for dt, part in section["per_interval"].items():
        result_text += f"--- Δt = {dt}: χ² = {fmt(part['chi_sq'])}, df = {part['df']} ---\n"
        result_text += "P(Δt):\n" + render_square(part["transition_matrix"]) + "\n"
        result_text += "Ожидаемые частоты:\n" + render_square(part["expected_table"][:2], STATE_LABELS) + "\n\n"
    result_text += (f"Суммарный χ² = {fmt(section['pooled_chi_sq'])}, df = {section['pooled_df']}, "
                    f"критическое значение = {fmt(section['critical_value'])} "
                    f"(α = {fmt(section['significance'])}), p = {fmt(section['p_value'])}\n")
    result_text += f"H0 отклоняется: {fmt(section['reject_null'])}\n"
    result_text += f"Примечание: {section['df_note']}\n"
    result_text += f"Интерпретация: \"{section['interpretation_quote']}\"\n"
    return result_text


def render_simulation(section: Dict[str, Any]) -> str:
    result_text = f"Субъектов: {section['subjects']}, визитов: {section['visits']}, seed: {section['seed']}\n"
    result_text += f"Вероятность пропуска визита: {fmt(section['skip_probability'])}\n"
    if section.get("output"):
        result_text += f"Данные записаны в {section['output']} ({section['format']})\n"
    return result_text


RENDERERS = {
    "dataset": ("Таблицы переходов", render_dataset),
    "simulation": ("Моделирование", render_simulation),
    "estimation": ("Оценка интенсивностей", render_estimation),
    "summary": ("Сводные характеристики", render_summary),
    "absorption": ("Поглощение", render_absorption),
    "gof": ("Критерий согласия χ²", render_gof),
}


def render_document(document: Dict[str, Any]) -> str:
    """Текст всех известных разделов документа в фиксированном порядке."""
    parts = []
    for key, (title, renderer) in RENDERERS.items():
        if key in document:
            parts.append(f"=== {title} ===\n{renderer(document[key])}")
    return "\n".join(parts)
