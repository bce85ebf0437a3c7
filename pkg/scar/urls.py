from django.urls import path

from .views import EvaluateView, PlanView, validate_scenario

urlpatterns = [
    path('scenarios/validate/', validate_scenario, name='scenario-validate'),
    path('plan/', PlanView.as_view(), name='plan'),
    path('evaluate/', EvaluateView.as_view(), name='evaluate'),
]
