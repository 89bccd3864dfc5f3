"""
TopV - оценка важности визуальных токенов через энтропийный оптимальный транспорт

Автономный движок, который ранжирует визуальные токены, решая задачу
оптимального транспорта между входами слоя (источники) и выходами Post-LN
(цели), отсекает малозначимые токены с равномерным восстановлением части
отсечённых и считает экономию FLOPs и KV-кэша.
Возможности:
- Визуально-ориентированная функция стоимости (признаки, пространство, центр)
- Алгоритм Синхорна в линейной и логарифмической областях + эталонный решатель
- Отсечение top-k с равномерным восстановлением
- Игрушечный трансформерный блок для получения целевых токенов без весов модели
- Учёт FLOPs и размера KV-кэша для схемы отсечения
Использование:
    topv gen --grid-h 24 --grid-w 24 --dim 64 --seed 7 --out source.topv
    topv simulate source.topv --out pair.topv
    topv prune pair.topv --out results/
    topv budget
    topv verify --sizes 2,4,8
"""
__version__ = "0.1.0"
__author__ = "Wwwoper"
__email__ = "rs.berenev@yandex.ru"
__license__ = "MIT"
